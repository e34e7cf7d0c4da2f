use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::branch::disk_point;
use super::{Hull, HullConstraint, HullError, Point};
use crate::conic::{AffineExpr, ConeKind, ConicProblem};
use crate::feeder::{Bus, DesUnit};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesBounds<T> {
    pub v_min: T,
    pub v_max: T,
    pub s_max: T,
    pub r_batt: T,
    pub r_cvt: T,
}

impl<T: Scalar> DesBounds<T> {
    pub fn from_unit(des: &DesUnit<T>, bus: &Bus<T>) -> Self {
        Self {
            v_min: bus.v_min,
            v_max: bus.v_max,
            s_max: des.s_max,
            r_batt: des.r_batt,
            r_cvt: des.r_cvt,
        }
    }

    pub fn r_eq(&self) -> T {
        self.r_batt + self.r_cvt
    }

    /// `r_eq·s_max²`, the largest value of `p_loss·v`.
    pub fn loss_cap(&self) -> T {
        self.r_eq() * self.s_max * self.s_max
    }
}

/// Cuts on `y = (p_des, q_des, p_loss, v)` valid for the loss equation
/// `p_loss·v = r_eq·p² + r_cvt·q²` on the converter disk and voltage box:
///
/// * C1 `r_eq·p² + r_cvt·q² <= p_loss·v`
/// * C2 `r_batt·q² + v_min·p_loss <= r_eq·s²`
/// * C3 `v_min·v_max·p_loss + r_eq·s²·v <= r_eq·s²·(v_min + v_max)`
#[derive(Debug, Clone, PartialEq)]
pub struct DesHull<T> {
    pub bounds: DesBounds<T>,
    /// C3 as `chord·y <= chord_offset`.
    pub chord: Point<T>,
    pub chord_offset: T,
}

pub fn make_des_hull<T: Scalar>(des: &DesUnit<T>, bus: &Bus<T>) -> Result<DesHull<T>, HullError> {
    DesHull::new(DesBounds::from_unit(des, bus))
}

impl<T: Scalar> DesHull<T> {
    pub fn new(bounds: DesBounds<T>) -> Result<Self, HullError> {
        if !(bounds.r_batt > T::zero() && bounds.r_cvt > T::zero()) {
            return Err(HullError::NonpositiveResistance(format!(
                "r_batt = {}, r_cvt = {}",
                bounds.r_batt, bounds.r_cvt
            )));
        }
        if !(bounds.v_min > T::zero() && bounds.v_min < bounds.v_max && bounds.s_max > T::zero()) {
            return Err(HullError::InconsistentLimits(format!(
                "need 0 < v_min < v_max and s_max > 0, got [{}, {}], {}",
                bounds.v_min, bounds.v_max, bounds.s_max
            )));
        }
        let e = bounds.loss_cap();
        Ok(Self {
            chord: [T::zero(), T::zero(), bounds.v_min * bounds.v_max, e],
            chord_offset: e * (bounds.v_min + bounds.v_max),
            bounds,
        })
    }

    /// `p_loss·v − r_eq·p² − r_cvt·q²`, nonnegative inside C1.
    pub fn loss_residual(&self, y: &Point<T>) -> T {
        let b = &self.bounds;
        y[2] * y[3] - b.r_eq() * y[0] * y[0] - b.r_cvt * y[1] * y[1]
    }

    pub fn asymmetry_lhs(&self, y: &Point<T>) -> T {
        self.bounds.r_batt * y[1] * y[1] + self.bounds.v_min * y[2]
    }

    pub fn chord_lhs(&self, y: &Point<T>) -> T {
        super::dot4(&self.chord, y)
    }

    /// C1 over `[p, q, p_loss, v]` columns.
    pub fn loss_cone_members(&self, cols: [usize; 4]) -> Vec<AffineExpr<T>> {
        let b = &self.bounds;
        vec![
            AffineExpr::scaled(cols[2], T::lit(0.5)),
            AffineExpr::col(cols[3]),
            AffineExpr::scaled(cols[0], b.r_eq().sqrt()),
            AffineExpr::scaled(cols[1], b.r_cvt.sqrt()),
        ]
    }

    /// C2 as `r_batt·q² <= 2·((e − v_min·p_loss)/2)·1`.
    pub fn asymmetry_members(&self, cols: [usize; 4]) -> Vec<AffineExpr<T>> {
        let b = &self.bounds;
        let half = T::lit(0.5);
        vec![
            AffineExpr::new(vec![(cols[2], -half * b.v_min)], half * b.loss_cap()),
            AffineExpr::constant(T::one()),
            AffineExpr::scaled(cols[1], b.r_batt.sqrt()),
        ]
    }

    pub fn chord_row(&self, cols: [usize; 4]) -> (Vec<(usize, T)>, T) {
        (vec![(cols[2], self.chord[2]), (cols[3], self.chord[3])], self.chord_offset)
    }
}

impl<T: Scalar> Hull<T> for DesHull<T> {
    fn slacks(&self, y: &Point<T>) -> Vec<(HullConstraint, T)> {
        let b = &self.bounds;
        vec![
            (HullConstraint::LossCone, -self.loss_residual(y)),
            (HullConstraint::AsymmetryCut, self.asymmetry_lhs(y) - b.loss_cap()),
            (HullConstraint::ChordCut, self.chord_lhs(y) - self.chord_offset),
            (
                HullConstraint::ConverterRating,
                y[0] * y[0] + y[1] * y[1] - b.s_max * b.s_max,
            ),
            (HullConstraint::LossLower, -y[2]),
            (HullConstraint::VoltageLower, b.v_min - y[3]),
            (HullConstraint::VoltageUpper, y[3] - b.v_max),
        ]
    }

    fn emit(&self, p: &mut ConicProblem<T>, cols: [usize; 4], label: &str) {
        let b = &self.bounds;
        p.add_cone(ConeKind::RotatedSoc, format!("{label}.c1"), self.loss_cone_members(cols));
        p.add_cone(ConeKind::RotatedSoc, format!("{label}.c2"), self.asymmetry_members(cols));
        let (coeffs, rhs) = self.chord_row(cols);
        p.add_le(format!("{label}.c3"), coeffs, rhs);
        p.add_cone(
            ConeKind::Soc,
            format!("{label}.rating"),
            vec![
                AffineExpr::constant(b.s_max),
                AffineExpr::col(cols[0]),
                AffineExpr::col(cols[1]),
            ],
        );
        p.add_ge(format!("{label}.loss_lo"), vec![(cols[2], T::one())], T::zero());
        p.add_ge(format!("{label}.v_lo"), vec![(cols[3], T::one())], b.v_min);
        p.add_le(format!("{label}.v_hi"), vec![(cols[3], T::one())], b.v_max);
    }
}

/// `n` points on the loss equation with `(p, q)` in the converter disk and
/// `v` uniform in its box; deterministic in `seed`.
pub fn sample_des_points<T: Scalar>(bounds: &DesBounds<T>, n: usize, seed: u64) -> Vec<Point<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let (p, q) = disk_point(&mut rng, bounds.s_max.as_f64());
            let v = T::lit(rng.gen_range(bounds.v_min.as_f64()..=bounds.v_max.as_f64()));
            let (p, q) = (T::lit(p), T::lit(q));
            let loss = (bounds.r_eq() * p * p + bounds.r_cvt * q * q) / v;
            [p, q, loss, v]
        })
        .collect()
}
