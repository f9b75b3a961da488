use super::{fit_exponent, CurvePoint, ExponentFit};
use crate::error::{Error, Result};
use crate::metric::{DistanceField, FieldEngine};

/// Greedy covering numbers `N(t)` of the field's grid by ε-metric balls of
/// radius `t`. Centres are pixel centres taken in increasing order of the
/// field value, skipping pixels already covered.
pub fn covering_counts(
    engine: &FieldEngine,
    field: &DistanceField,
    t_scales: &[f64],
) -> Result<Vec<CurvePoint>> {
    if t_scales.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "t_scales must be strictly decreasing".into(),
        ));
    }
    if let Some(t) = t_scales.iter().find(|&&t| !(t > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "scale must be positive, got {t}"
        )));
    }
    let grid = &field.grid;
    let total = grid.nx * grid.ny;
    let mut order: Vec<usize> = (0..total).collect();
    order.sort_by(|&a, &b| field.values[a].total_cmp(&field.values[b]).then(a.cmp(&b)));
    let index = engine.line_index(grid);
    let mut out = Vec::with_capacity(t_scales.len());
    for &t in t_scales {
        let mut covered = vec![false; total];
        let mut left = total;
        let mut count = 0usize;
        for &k in &order {
            if left == 0 {
                break;
            }
            if covered[k] {
                continue;
            }
            let center = grid.pixel_center(k % grid.nx, k / grid.nx);
            let map = engine.source_within(&center, t)?;
            left -= map.cover(grid, t, &mut covered, &index);
            count += 1;
        }
        out.push(CurvePoint {
            t,
            value: count as f64,
            stderr: 0.0,
            n: 1,
        });
    }
    Ok(out)
}

/// Covering dimension: slope of `log N(t)` against `log(1/t)`.
pub fn box_dimension(
    engine: &FieldEngine,
    field: &DistanceField,
    t_scales: &[f64],
) -> Result<ExponentFit> {
    let counts = covering_counts(engine, field, t_scales)?;
    fit_covering(&counts)
}

/// Fit of precomputed covering numbers, abscissa `1/t`.
pub fn fit_covering(counts: &[CurvePoint]) -> Result<ExponentFit> {
    let inv: Vec<CurvePoint> = counts
        .iter()
        .map(|p| CurvePoint { t: 1.0 / p.t, ..*p })
        .collect();
    let lo = inv.iter().map(|p| p.t).fold(f64::INFINITY, f64::min);
    let hi = inv.iter().map(|p| p.t).fold(0.0, f64::max);
    fit_exponent(&inv, (lo, hi))
}
