//! Per-node least-squares observation models and their attack overlays.
//!
//! Node `i` holds a row `(h_i, s_i)` of the affine model `s_i = h_i·x_o + w_i`
//! and the private loss `f_i(x) = (h_i·x - s_i)^2`. Malicious nodes follow the
//! protocol but run with altered rows (or, for `TargetPull`, an altered loss
//! whose gradient drags towards a chosen target).

use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::scalar::Scalar;
use crate::vector::{SquareMatrix, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row<T> {
    pub h: Vector<T>,
    pub s: T,
}

/// How malicious nodes alter their local objective.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackSpec<T> {
    #[default]
    None,
    /// Sensor spoofing: `s_m <- s_m + delta_s`.
    SpoofShift { delta_s: T },
    /// `h_m <- mean(regular h) - shift·1`, `s_m <- mean(regular s) + shift`.
    MeanShift { shift: T },
    /// Dynamic attacker whose gradient is `gain·(x - target)`.
    TargetPull { target: Vector<T>, gain: T },
}

impl<T: Scalar> AttackSpec<T> {
    pub fn is_none(&self) -> bool {
        matches!(self, AttackSpec::None)
    }

    pub fn name(&self) -> &'static str {
        match self {
            AttackSpec::None => "none",
            AttackSpec::SpoofShift { .. } => "spoof_shift",
            AttackSpec::MeanShift { .. } => "mean_shift",
            AttackSpec::TargetPull { .. } => "target_pull",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveInstance<T> {
    pub d: usize,
    pub x_o: Vector<T>,
    pub noise_sigma: T,
    pub rows: Vec<Row<T>>,
    #[serde(default)]
    pub malicious: BTreeSet<NodeId>,
    #[serde(default)]
    pub attack: AttackSpec<T>,
}

fn normal<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::lit(rng.sample::<f64, _>(StandardNormal))
}

/// Draws `n` rows with `h_i ~ N(0, h_sigma^2 I)` and `w_i ~ N(0, noise_sigma^2)`.
///
/// Draw order is `h_i` components then `w_i`, node by node.
pub fn sample_instance<T: Scalar, R: Rng + ?Sized>(
    n: usize,
    x_o: &Vector<T>,
    h_sigma: T,
    noise_sigma: T,
    rng: &mut R,
) -> Result<ObjectiveInstance<T>> {
    let d = x_o.dim();
    if n == 0 || d == 0 {
        return Err(Error::invalid(format!("need n >= 1 and d >= 1, got n={n}, d={d}")));
    }
    if !(h_sigma >= T::zero()) || !(noise_sigma >= T::zero()) {
        return Err(Error::invalid("standard deviations must be non-negative"));
    }
    let rows = (0..n)
        .map(|_| {
            let h: Vector<T> = (0..d)
                .map(|_| h_sigma * normal::<T, _>(rng))
                .collect::<Vec<_>>()
                .into();
            let w = noise_sigma * normal::<T, _>(rng);
            let s = h.dot(x_o) + w;
            Row { h, s }
        })
        .collect();
    Ok(ObjectiveInstance {
        d,
        x_o: x_o.clone(),
        noise_sigma,
        rows,
        malicious: BTreeSet::new(),
        attack: AttackSpec::None,
    })
}

impl<T: Scalar> ObjectiveInstance<T> {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn regular(&self) -> BTreeSet<NodeId> {
        (0..self.n()).filter(|i| !self.malicious.contains(i)).collect()
    }

    pub fn all_nodes(&self) -> BTreeSet<NodeId> {
        (0..self.n()).collect()
    }

    fn row(&self, i: NodeId) -> Result<&Row<T>> {
        self.rows
            .get(i)
            .ok_or_else(|| Error::invalid(format!("node {i} outside [0, {})", self.n())))
    }

    fn check_dim(&self, x: &Vector<T>) -> Result<()> {
        if x.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: x.dim(),
            });
        }
        Ok(())
    }

    fn pulls_to_target(&self, i: NodeId) -> Option<(&Vector<T>, T)> {
        match &self.attack {
            AttackSpec::TargetPull { target, gain } if self.malicious.contains(&i) => {
                Some((target, *gain))
            }
            _ => None,
        }
    }

    /// `(h_i·x - s_i)^2` using node `i`'s current row.
    pub fn loss(&self, i: NodeId, x: &Vector<T>) -> Result<T> {
        self.check_dim(x)?;
        let row = self.row(i)?;
        let r = row.h.dot(x) - row.s;
        Ok(r * r)
    }

    /// Gradient node `i` descends along: `2 h_i (h_i·x - s_i)`, or
    /// `gain·(x - target)` for a malicious node under `TargetPull`.
    pub fn gradient(&self, i: NodeId, x: &Vector<T>) -> Result<Vector<T>> {
        self.check_dim(x)?;
        if let Some((target, gain)) = self.pulls_to_target(i) {
            return Ok(x.sub(target).scale(gain));
        }
        let row = self.row(i)?;
        let r = row.h.dot(x) - row.s;
        Ok(row.h.scale(T::two() * r))
    }

    /// Returns a new instance with the attack applied to `malicious` rows.
    ///
    /// Regular rows are never touched. `MeanShift` means are taken over the
    /// regular rows, so re-applying it is a no-op. `TargetPull` leaves rows
    /// unchanged and only records the overlay consulted by [`Self::gradient`].
    pub fn apply_attack(&self, malicious: &BTreeSet<NodeId>, attack: &AttackSpec<T>) -> Result<Self> {
        if let Some(&bad) = malicious.iter().find(|&&m| m >= self.n()) {
            return Err(Error::invalid(format!("malicious node {bad} outside [0, {})", self.n())));
        }
        let mut out = self.clone();
        out.malicious = malicious.clone();
        out.attack = attack.clone();
        match attack {
            AttackSpec::None | AttackSpec::TargetPull { .. } => {}
            AttackSpec::SpoofShift { delta_s } => {
                for &m in malicious {
                    out.rows[m].s = self.rows[m].s + *delta_s;
                }
            }
            AttackSpec::MeanShift { shift } => {
                let regular: Vec<&Row<T>> = (0..self.n())
                    .filter(|i| !malicious.contains(i))
                    .map(|i| &self.rows[i])
                    .collect();
                if regular.is_empty() {
                    return Err(Error::invalid("mean_shift needs at least one regular node"));
                }
                let nr = T::from_count(regular.len());
                let mean_h = Vector::mean(regular.iter().map(|r| &r.h)).unwrap_or_else(|| Vector::zeros(self.d));
                let mean_s = regular.iter().map(|r| r.s).sum::<T>() / nr;
                let h_att = mean_h.sub(&Vector::filled(self.d, *shift));
                for &m in malicious {
                    out.rows[m] = Row {
                        h: h_att.clone(),
                        s: mean_s + *shift,
                    };
                }
            }
        }
        Ok(out)
    }

    /// Sum of local Hessians and linear terms over `subset`:
    /// `sum H_i`, `sum b_i` with `grad f_i(x) = H_i x - b_i`.
    fn normal_equations(&self, subset: &BTreeSet<NodeId>) -> Result<(SquareMatrix<T>, Vector<T>)> {
        let mut hess = SquareMatrix::zeros(self.d);
        let mut rhs = Vector::zeros(self.d);
        for &i in subset {
            if let Some((target, gain)) = self.pulls_to_target(i) {
                for k in 0..self.d {
                    hess.set(k, k, hess.get(k, k) + gain);
                }
                rhs.axpy(gain, target);
            } else {
                let row = self.row(i)?;
                hess.add_outer(T::two(), &row.h);
                rhs.axpy(T::two() * row.s, &row.h);
            }
        }
        Ok((hess, rhs))
    }

    /// Minimizer of `sum_{i in subset} f_i` from the normal equations.
    ///
    /// With `subset = V_r` this is the attack-free benchmark `x*`; with all
    /// nodes of an attacked instance it is the attacker's consensus point `x^a`.
    pub fn closed_form_solution(&self, subset: &BTreeSet<NodeId>) -> Result<Vector<T>> {
        if subset.is_empty() {
            return Err(Error::invalid("empty node subset"));
        }
        let (hess, rhs) = self.normal_equations(subset)?;
        hess.solve(&rhs).map_err(|e| match e {
            Error::Singular(msg) => Error::Singular(format!(
                "Hessian over {} nodes is not positive definite ({msg})",
                subset.len()
            )),
            other => other,
        })
    }

    /// Smallest eigenvalue of `(1/|subset|) sum H_i`, i.e. `(2/|S|) A^T A` for
    /// plain least-squares rows.
    pub fn hessian_min_eigenvalue(&self, subset: &BTreeSet<NodeId>) -> Result<T> {
        if subset.is_empty() {
            return Err(Error::invalid("empty node subset"));
        }
        let (hess, _) = self.normal_equations(subset)?;
        let eig = hess
            .scale(T::one() / T::from_count(subset.len()))
            .symmetric_eigenvalues();
        Ok(eig[0])
    }

    pub fn summed_gradient(&self, subset: &BTreeSet<NodeId>, x: &Vector<T>) -> Result<Vector<T>> {
        let mut acc = Vector::zeros(self.d);
        for &i in subset {
            acc.axpy(T::one(), &self.gradient(i, x)?);
        }
        Ok(acc)
    }

    /// Minimum-norm minimizer of `f_i`: `h_i s_i / |h_i|^2` (zero if `h_i = 0`).
    pub fn local_minimizer(&self, i: NodeId) -> Result<Vector<T>> {
        if let Some((target, _)) = self.pulls_to_target(i) {
            return Ok(target.clone());
        }
        let row = self.row(i)?;
        let hh = row.h.norm_sq();
        if hh == T::zero() {
            return Ok(Vector::zeros(self.d));
        }
        Ok(row.h.scale(row.s / hh))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: Self = serde_json::from_str(text)?;
        if inst.x_o.dim() != inst.d {
            return Err(Error::DimensionMismatch {
                expected: inst.d,
                got: inst.x_o.dim(),
            });
        }
        if let Some(row) = inst.rows.iter().find(|r| r.h.dim() != inst.d) {
            return Err(Error::DimensionMismatch {
                expected: inst.d,
                got: row.h.dim(),
            });
        }
        if let Some(&bad) = inst.malicious.iter().find(|&&m| m >= inst.rows.len()) {
            return Err(Error::invalid(format!("malicious node {bad} has no row")));
        }
        Ok(inst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{seeded, Stream};

    fn manual(rows: &[(&[f64], f64)]) -> ObjectiveInstance<f64> {
        let d = rows[0].0.len();
        ObjectiveInstance {
            d,
            x_o: Vector::zeros(d),
            noise_sigma: 0.0,
            rows: rows
                .iter()
                .map(|(h, s)| Row {
                    h: Vector::from_f64(h),
                    s: *s,
                })
                .collect(),
            malicious: BTreeSet::new(),
            attack: AttackSpec::None,
        }
    }

    #[test]
    fn loss_examples() {
        let inst = manual(&[(&[1.0, 0.0], 2.0), (&[1.0, 1.0], 0.0)]);
        assert_eq!(inst.loss(0, &Vector::from_f64(&[2.0, 5.0])).unwrap(), 0.0);
        assert_eq!(inst.loss(1, &Vector::from_f64(&[1.0, 1.0])).unwrap(), 4.0);
        assert!(matches!(
            inst.loss(0, &Vector::from_f64(&[1.0])),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn gradient_examples() {
        let inst = manual(&[(&[1.0, 0.0], 2.0), (&[1.0, 1.0], 0.0)]);
        assert_eq!(
            inst.gradient(0, &Vector::from_f64(&[2.0, 0.0])).unwrap(),
            Vector::from_f64(&[0.0, 0.0])
        );
        assert_eq!(
            inst.gradient(1, &Vector::from_f64(&[1.0, 1.0])).unwrap(),
            Vector::from_f64(&[4.0, 4.0])
        );
    }

    #[test]
    fn target_pull_vanishes_at_target() {
        let inst = manual(&[(&[1.0, 0.0], 2.0), (&[1.0, 1.0], 0.0)]);
        let target = Vector::from_f64(&[3.0, -1.0]);
        let att = inst
            .apply_attack(
                &BTreeSet::from([1]),
                &AttackSpec::TargetPull {
                    target: target.clone(),
                    gain: 1.0,
                },
            )
            .unwrap();
        assert_eq!(att.gradient(1, &target).unwrap(), Vector::zeros(2));
        // regular node is unaffected
        assert_eq!(
            att.gradient(0, &target).unwrap(),
            inst.gradient(0, &target).unwrap()
        );
        // x^a balances the pull against the regular least-squares term
        let xa = att.closed_form_solution(&att.all_nodes()).unwrap();
        assert!(att.summed_gradient(&att.all_nodes(), &xa).unwrap().norm2() < 1e-12);
    }

    #[test]
    fn closed_form_scalar_example() {
        let inst = manual(&[(&[1.0], 1.0), (&[1.0], 2.0), (&[1.0], 3.0)]);
        let x = inst.closed_form_solution(&inst.all_nodes()).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn noise_free_recovers_latent() {
        let x_o = Vector::from_f64(&[0.0859, -1.4916]);
        let inst = sample_instance(20, &x_o, 1.0, 0.0, &mut seeded(4, Stream::Instance)).unwrap();
        for (r, row) in inst.rows.iter().enumerate() {
            assert_eq!(row.s, row.h.dot(&x_o), "row {r}");
        }
        let x = inst.closed_form_solution(&inst.all_nodes()).unwrap();
        assert!(x.distance(&x_o, Default::default()) < 1e-12);
    }

    #[test]
    fn sampling_is_deterministic() {
        let x_o = Vector::<f64>::from_f64(&[0.0859, -1.4916]);
        let a = sample_instance(20, &x_o, 1.0, 1.0, &mut seeded(4, Stream::Instance)).unwrap();
        let b = sample_instance(20, &x_o, 1.0, 1.0, &mut seeded(4, Stream::Instance)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n(), 20);
        assert_eq!(a.d, 2);
        assert!(sample_instance(0, &x_o, 1.0, 1.0, &mut seeded(4, Stream::Instance)).is_err());
    }

    #[test]
    fn hessian_eigen_examples() {
        let inst = manual(&[(&[1.0], 0.0), (&[1.0], 0.0)]);
        assert!((inst.hessian_min_eigenvalue(&inst.all_nodes()).unwrap() - 2.0).abs() < 1e-15);
        let inst = manual(&[(&[1.0, 0.0], 0.0), (&[0.0, 1.0], 0.0)]);
        assert!((inst.hessian_min_eigenvalue(&inst.all_nodes()).unwrap() - 1.0).abs() < 1e-15);
        let inst = manual(&[(&[1.0, 0.0], 0.0), (&[1.0, 0.0], 1.0)]);
        assert_eq!(inst.hessian_min_eigenvalue(&inst.all_nodes()).unwrap(), 0.0);
        assert!(matches!(
            inst.closed_form_solution(&inst.all_nodes()),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn mean_shift_rows() {
        let x_o = Vector::from_f64(&[0.0859, -1.4916]);
        let inst = sample_instance(20, &x_o, 1.0, 1.0, &mut seeded(7, Stream::Instance)).unwrap();
        let mal = BTreeSet::from([17, 18, 19]);
        let att = inst
            .apply_attack(&mal, &AttackSpec::MeanShift { shift: 5.0 })
            .unwrap();
        let mean_h0: f64 = (0..17).map(|i| inst.rows[i].h[0]).sum::<f64>() / 17.0;
        let mean_s: f64 = (0..17).map(|i| inst.rows[i].s).sum::<f64>() / 17.0;
        for &m in &mal {
            assert!((att.rows[m].h[0] - (mean_h0 - 5.0)).abs() < 1e-12);
            assert!((att.rows[m].s - (mean_s + 5.0)).abs() < 1e-12);
        }
        assert_eq!(&att.rows[..17], &inst.rows[..17]);
        let again = att
            .apply_attack(&mal, &AttackSpec::MeanShift { shift: 5.0 })
            .unwrap();
        assert_eq!(again, att);
    }

    #[test]
    fn zero_spoof_is_identity_on_rows() {
        let x_o = Vector::from_f64(&[1.0, 2.0]);
        let inst = sample_instance(5, &x_o, 1.0, 1.0, &mut seeded(1, Stream::Instance)).unwrap();
        let att = inst
            .apply_attack(&BTreeSet::from([2]), &AttackSpec::SpoofShift { delta_s: 0.0 })
            .unwrap();
        assert_eq!(att.rows, inst.rows);
    }

    #[test]
    fn json_schema_round_trip() {
        let x_o = Vector::from_f64(&[1.0, 2.0]);
        let inst = sample_instance(3, &x_o, 1.0, 0.5, &mut seeded(1, Stream::Instance))
            .unwrap()
            .apply_attack(&BTreeSet::from([2]), &AttackSpec::MeanShift { shift: 5.0 })
            .unwrap();
        let text = inst.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in ["d", "x_o", "noise_sigma", "rows", "malicious", "attack"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["attack"]["kind"], "mean_shift");
        assert_eq!(ObjectiveInstance::<f64>::from_json(&text).unwrap(), inst);
        assert!(ObjectiveInstance::<f64>::from_json(r#"{"d":3,"x_o":[1,2],"noise_sigma":0,"rows":[]}"#).is_err());
    }
}
