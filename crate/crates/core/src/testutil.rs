use chrono::NaiveDate;
use ndarray::Array2;

use crate::design::{build_design, DesignMatrix, LagMode, LagSpec};
use crate::frame::{ColumnMeta, Resolution, Role, TimeSeriesFrame};

/// A single-target design whose `z` and `y` are replaced by the given matrices.
pub(crate) fn raw_design(z: Array2<f64>, y: Array2<f64>) -> DesignMatrix {
    let n = z.nrows();
    let q = z.ncols();
    let start = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
    let frame = TimeSeriesFrame::new(
        (0..n + 1).map(|i| start + chrono::Duration::days(i as i64)).collect(),
        Resolution::Daily,
        vec![ColumnMeta::new("y", "", Role::Target)],
        Array2::zeros((n + 1, 1)),
        (0..q - 1)
            .map(|j| ColumnMeta::new(format!("x{j}"), "", Role::Exog))
            .collect(),
        Array2::zeros((n + 1, q - 1)),
    )
    .unwrap();
    let mut dm = build_design(&frame, &LagSpec::new(1, 1, LagMode::Positional).unwrap()).unwrap();
    dm.z = z;
    dm.y = y;
    dm
}
