//! Hand-set comparator weights for a single-unit NSR on two inputs.

use super::NsrParams;
use crate::error::Result;
use crate::tasks::ComparisonOp;

/// Selection logit placed on the chosen operand; the softmax of
/// `[SELECT_LOGIT, 0]` is one-hot to within 4e-44.
pub const SELECT_LOGIT: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NsrWeightRow {
    pub op: ComparisonOp,
    pub w_sign: f64,
    pub w_zero: f64,
    pub bias: f64,
}

const fn row(op: ComparisonOp, w_sign: f64, w_zero: f64, bias: f64) -> NsrWeightRow {
    NsrWeightRow { op, w_sign, w_zero, bias }
}

/// Published weight table, verbatim. The `<` and `>=` rows misclassify
/// differences of magnitude two or more, where the zero bit saturates to -1
/// and cancels the sign bit; see [`NSR_TABLE`].
pub const NSR_TABLE_AS_PRINTED: [NsrWeightRow; 6] = [
    row(ComparisonOp::Gt, 100.0, 0.0, -50.0),
    row(ComparisonOp::Le, -100.0, 0.0, 50.0),
    row(ComparisonOp::Lt, -100.0, -100.0, 50.0),
    row(ComparisonOp::Ge, 100.0, 100.0, -50.0),
    row(ComparisonOp::Eq, 0.0, 100.0, -50.0),
    row(ComparisonOp::Ne, 0.0, -100.0, 50.0),
];

/// Working table: the printed one with the bias sign of `<` and `>=` flipped.
pub const NSR_TABLE: [NsrWeightRow; 6] = [
    row(ComparisonOp::Gt, 100.0, 0.0, -50.0),
    row(ComparisonOp::Le, -100.0, 0.0, 50.0),
    row(ComparisonOp::Lt, -100.0, -100.0, -50.0),
    row(ComparisonOp::Ge, 100.0, 100.0, 50.0),
    row(ComparisonOp::Eq, 0.0, 100.0, -50.0),
    row(ComparisonOp::Ne, 0.0, -100.0, 50.0),
];

impl NsrWeightRow {
    pub fn for_op(op: ComparisonOp) -> NsrWeightRow {
        *NSR_TABLE.iter().find(|r| r.op == op).expect("every op has a row")
    }

    /// Layer computing `op(x1, x2)` on inputs `(x1, x2)`.
    pub fn build(&self, lambda: f64) -> Result<NsrParams> {
        NsrParams::comparator(2, 0, 1, self.w_sign, self.w_zero, self.bias, lambda)
    }
}
