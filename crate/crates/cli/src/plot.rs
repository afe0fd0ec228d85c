//! Static SVG figures.

use plotters::prelude::*;

use crate::error::CliError;

fn plot_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Io(std::io::Error::other(format!("plot: {e}")))
}

/// Measured fringe with error bars and the fitted curve.
pub fn fringe_svg(
    title: &str,
    points: &[(f64, f64, f64)],
    fit: impl Fn(f64) -> f64,
) -> Result<String, CliError> {
    let mut buf = String::new();
    {
        let root = SVGBackend::with_string(&mut buf, (800, 500)).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let x0 = points.first().map_or(0.0, |p| p.0);
        let x1 = points.last().map_or(1.0, |p| p.0);
        let mut chart = ChartBuilder::on(&root)
            .margin(15)
            .caption(title, ("sans-serif", 20))
            .x_label_area_size(40)
            .y_label_area_size(50)
            .build_cartesian_2d(x0..x1, -0.02f64..1.02f64)
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .x_desc("theta (rad)")
            .y_desc("P")
            .draw()
            .map_err(plot_err)?;
        let n = 1000;
        chart
            .draw_series(LineSeries::new(
                (0..=n).map(|i| {
                    let x = x0 + (x1 - x0) * i as f64 / n as f64;
                    (x, fit(x))
                }),
                &BLUE,
            ))
            .map_err(plot_err)?;
        chart
            .draw_series(points.iter().map(|&(x, y, _)| Circle::new((x, y), 3, BLACK.filled())))
            .map_err(plot_err)?;
        chart
            .draw_series(points.iter().filter(|p| p.2.is_finite()).map(|&(x, y, e)| {
                PathElement::new(vec![(x, y - e), (x, y + e)], BLACK)
            }))
            .map_err(plot_err)?;
        root.present().map_err(plot_err)?;
    }
    Ok(buf)
}

/// Normalized precision against `4ml` on log–log axes with the `1/(4ml)` line.
pub fn scaling_svg(points: &[(f64, f64)]) -> Result<String, CliError> {
    let mut buf = String::new();
    {
        let root = SVGBackend::with_string(&mut buf, (700, 500)).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let xs = points.iter().map(|p| p.0);
        let (xmin, xmax) = xs.fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(x), b.max(x)));
        let ys = points.iter().map(|p| p.1).chain([1.0 / xmin, 1.0 / xmax]);
        let (ymin, ymax) = ys.fold((f64::INFINITY, 0.0f64), |(a, b), y| (a.min(y), b.max(y)));
        let mut chart = ChartBuilder::on(&root)
            .margin(15)
            .caption("Normalized precision vs 4ml", ("sans-serif", 20))
            .x_label_area_size(40)
            .y_label_area_size(70)
            .build_cartesian_2d(
                (xmin / 1.5..xmax * 1.5).log_scale(),
                (ymin / 1.5..ymax * 1.5).log_scale(),
            )
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .x_desc("4ml")
            .y_desc("rmse * sqrt(nu) (rad)")
            .draw()
            .map_err(plot_err)?;
        chart
            .draw_series(LineSeries::new(
                [xmin / 1.5, xmax * 1.5].map(|x| (x, 1.0 / x)),
                &RED,
            ))
            .map_err(plot_err)?;
        chart
            .draw_series(points.iter().map(|&(x, y)| Circle::new((x, y), 4, BLACK.filled())))
            .map_err(plot_err)?;
        root.present().map_err(plot_err)?;
    }
    Ok(buf)
}
