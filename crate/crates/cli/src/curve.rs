//! Plot-ready ECDF of the transformed sample against the identity line.

use condks::SortedUnitSample;

/// One `x,empirical,reference` row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub x: f64,
    pub empirical: f64,
    pub reference: f64,
}

/// Rows at every jump (left limit, then value) merged with `grid + 1`
/// equally spaced points on `[0, 1]`. `grid == 0` emits the jumps only.
pub fn curve_rows(sample: &SortedUnitSample, grid: usize) -> Vec<CurveRow> {
    let values = sample.values();
    let n = values.len() as f64;
    let row = |x: f64, empirical: f64| CurveRow {
        x,
        empirical,
        reference: x,
    };

    let mut jumps = Vec::new();
    let mut i = 0;
    while i < values.len() {
        let v = values[i];
        let mut j = i;
        while j < values.len() && values[j] == v {
            j += 1;
        }
        jumps.push(row(v, i as f64 / n));
        jumps.push(row(v, j as f64 / n));
        i = j;
    }
    if grid == 0 {
        return jumps;
    }

    let mut rows = Vec::with_capacity(jumps.len() + grid + 1);
    let mut next_jump = jumps.iter().peekable();
    for k in 0..=grid {
        let g = k as f64 / grid as f64;
        while let Some(&&j) = next_jump.peek() {
            if j.x <= g {
                rows.push(j);
                next_jump.next();
            } else {
                break;
            }
        }
        if values.binary_search_by(|v| v.total_cmp(&g)).is_ok() {
            continue;
        }
        let below = values.partition_point(|&v| v <= g);
        rows.push(row(g, below as f64 / n));
    }
    rows.extend(next_jump.copied());
    rows
}
