use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::expoly::{canonicalize, ExpPoly, Term, TermDoc};
use super::mode::Mode;
use super::SeriesError;

/// Terms smaller than this fraction of the series' largest coefficient are dropped.
pub const DEFAULT_DROP_TOL: f64 = 1e-14;

/// Products whose magnitude is below this multiple of the drop threshold are not formed.
const PRODUCT_SKIP: f64 = 1e-3;

/// Dense accumulation is used while `(2K+1)ⁿ` stays below this.
const DENSE_LIMIT: usize = 1 << 20;

struct PlaneEntry<'a> {
    k: &'a [i32],
    l1: u32,
    idx: i64,
    c: Complex64,
    abs: f64,
}

/// All terms sharing one `(power, rate)`, largest first.
struct Plane<'a> {
    power: u32,
    rate: Complex64,
    entries: Vec<PlaneEntry<'a>>,
}

fn planes(modes: &BTreeMap<Mode, ExpPoly>, side: i64, k_max: u32) -> Vec<Plane<'_>> {
    let mut out: Vec<Plane> = Vec::new();
    for (k, c) in modes {
        let idx = k.0.iter().fold(0i64, |acc, &v| acc * side + v as i64 + k_max as i64);
        let l1 = k.l1();
        for t in c.terms() {
            let entry = PlaneEntry {
                k: &k.0,
                l1,
                idx,
                c: t.coeff,
                abs: t.coeff.norm(),
            };
            match out
                .iter_mut()
                .find(|p| p.power == t.power && super::expoly::same_rate(p.rate, t.rate))
            {
                Some(p) => p.entries.push(entry),
                None => out.push(Plane {
                    power: t.power,
                    rate: t.rate,
                    entries: vec![entry],
                }),
            }
        }
    }
    for p in &mut out {
        p.entries.sort_by(|a, b| b.abs.total_cmp(&a.abs));
    }
    out
}

fn merge_into(cell: &mut Vec<Term>, t: Term) {
    for u in cell.iter_mut() {
        if u.power == t.power && super::expoly::same_rate(u.rate, t.rate) {
            u.coeff += t.coeff;
            return;
        }
    }
    cell.push(t);
}

/// Fourier series in the angles with exp-poly time coefficients,
/// truncated to `|k| ≤ k_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierSeries {
    dim: usize,
    k_max: u32,
    drop_tol: f64,
    real: bool,
    modes: BTreeMap<Mode, ExpPoly>,
}

impl FourierSeries {
    pub fn zero(dim: usize, k_max: u32) -> Self {
        Self {
            dim,
            k_max,
            drop_tol: DEFAULT_DROP_TOL,
            real: true,
            modes: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, k_max: u32, c: Complex64) -> Self {
        let mut s = Self::zero(dim, k_max);
        s.real = c.im == 0.0;
        if c != Complex64::new(0.0, 0.0) {
            s.modes.insert(Mode::zero(dim), ExpPoly::constant(c));
        }
        s
    }

    /// A single Fourier mode `coeff(ξ)·e^{i⟨k,q⟩}`; modes beyond `k_max` give zero.
    pub fn single(k: Mode, coeff: ExpPoly, k_max: u32) -> Self {
        let dim = k.dim();
        let mut s = Self::zero(dim, k_max);
        s.real = false;
        if !coeff.is_zero() && k.l1() <= k_max {
            s.real = k.is_zero() && coeff.conj() == coeff;
            s.modes.insert(k, coeff);
        }
        s
    }

    /// `amp · cos(⟨k,q⟩ + phase) · e^{-aξ}`, a real series.
    pub fn cosine(k: Mode, amp: f64, phase: f64, decay: f64, k_max: u32) -> Result<Self, SeriesError> {
        let half = Complex64::from_polar(0.5 * amp, phase);
        let s = Self::single(k.clone(), ExpPoly::decaying(half, decay)?, k_max)
            .add(&Self::single(k.neg(), ExpPoly::decaying(half.conj(), decay)?, k_max))?;
        Ok(s.with_real(true))
    }

    /// Assembles a series from `(mode, coefficient)` pairs, merging duplicates.
    pub fn from_modes(
        dim: usize,
        k_max: u32,
        modes: impl IntoIterator<Item = (Mode, ExpPoly)>,
    ) -> Result<Self, SeriesError> {
        let mut s = Self::zero(dim, k_max);
        for (k, c) in modes {
            if k.dim() != dim {
                return Err(SeriesError::DimensionMismatch { left: dim, right: k.dim() });
            }
            if k.l1() > k_max {
                continue;
            }
            let slot = s.modes.entry(k).or_default();
            *slot = slot.add(&c);
        }
        s.modes.retain(|_, c| !c.is_zero());
        s.real = s.check_conjugate_symmetry(0.0);
        Ok(s)
    }

    pub fn with_drop_tol(mut self, tol: f64) -> Self {
        self.drop_tol = tol;
        self.prune();
        self
    }

    pub(crate) fn with_real(mut self, real: bool) -> Self {
        self.real = real;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k_max(&self) -> u32 {
        self.k_max
    }

    pub fn drop_tol(&self) -> f64 {
        self.drop_tol
    }

    /// True when the series is known to represent a real function.
    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn is_zero(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> impl Iterator<Item = (&Mode, &ExpPoly)> {
        self.modes.iter()
    }

    pub fn coeff(&self, k: &Mode) -> Option<&ExpPoly> {
        self.modes.get(k)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.modes.values().map(ExpPoly::max_abs_coeff).fold(0.0, f64::max)
    }

    /// Largest `|k|` carrying a non-zero coefficient.
    pub fn max_order(&self) -> u32 {
        self.modes.keys().map(Mode::l1).max().unwrap_or(0)
    }

    /// Slowest decay rate over every term, `None` when zero.
    pub fn min_decay(&self) -> Option<f64> {
        self.modes.values().filter_map(ExpPoly::min_decay).reduce(f64::min)
    }

    /// Checks `c_{-k} = conj(c_k)` coefficient-wise, to relative tolerance.
    pub fn check_conjugate_symmetry(&self, rel_tol: f64) -> bool {
        let scale = self.max_abs_coeff();
        self.modes.iter().all(|(k, c)| {
            let mirror = self.modes.get(&k.neg()).cloned().unwrap_or_default();
            let diff = c.sub(&mirror.conj());
            diff.max_abs_coeff() <= rel_tol * scale
        })
    }

    fn compatible(&self, other: &Self) -> Result<(), SeriesError> {
        if self.dim != other.dim {
            return Err(SeriesError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    fn like(&self, other: &Self) -> Self {
        let mut s = Self::zero(self.dim, self.k_max.max(other.k_max));
        s.drop_tol = self.drop_tol.max(other.drop_tol);
        s
    }

    /// Removes terms below `drop_tol` relative to the largest coefficient.
    pub fn prune(&mut self) {
        let cut = self.drop_tol * self.max_abs_coeff();
        if cut > 0.0 {
            for c in self.modes.values_mut() {
                c.retain_terms(|t| t.coeff.norm() >= cut);
            }
        }
        self.modes.retain(|_, c| !c.is_zero());
    }

    pub fn add(&self, other: &Self) -> Result<Self, SeriesError> {
        self.compatible(other)?;
        let mut out = self.like(other);
        out.modes = self.modes.clone();
        for (k, c) in &other.modes {
            if k.l1() > out.k_max {
                continue;
            }
            let slot = out.modes.entry(k.clone()).or_default();
            *slot = slot.add(c);
        }
        out.real = self.real && other.real;
        out.prune();
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SeriesError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(Complex64::new(-1.0, 0.0))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        if s == Complex64::new(0.0, 0.0) {
            out.modes.clear();
            return out;
        }
        for c in out.modes.values_mut() {
            *c = c.scale(s);
        }
        out.real = self.real && s.im == 0.0;
        out
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    /// Product. Modes outside `|k| ≤ k_max` are discarded and their
    /// coefficient mass returned alongside.
    pub fn mul_report(&self, other: &Self) -> Result<(Self, f64), SeriesError> {
        self.compatible(other)?;
        let mut out = self.like(other);
        // products this far below the largest possible one are pruned anyway
        let skip = PRODUCT_SKIP * out.drop_tol * self.max_abs_coeff() * other.max_abs_coeff();
        let side = 2 * out.k_max as usize + 1;
        let discarded = match side.checked_pow(self.dim as u32) {
            Some(size) if size <= DENSE_LIMIT => self.mul_dense(other, &mut out, skip),
            _ => self.mul_sparse(other, &mut out, skip),
        };
        out.real = self.real && other.real;
        out.prune();
        Ok((out, discarded))
    }

    /// Plane-by-plane convolution on the dense box `[-K, K]ⁿ`: terms are
    /// grouped by `(power, rate)` so each pair of planes is a plain
    /// complex multiply-add.
    fn mul_dense(&self, other: &Self, out: &mut Self, skip: f64) -> f64 {
        let n = self.dim;
        let k_max = out.k_max;
        let side = 2 * k_max as i64 + 1;
        let size = side.pow(n as u32) as usize;
        let origin: i64 = (0..n).fold(0, |acc, _| acc * side + k_max as i64);
        let lhs = planes(&self.modes, side, k_max);
        let rhs = planes(&other.modes, side, k_max);
        let mut outs: Vec<(u32, Complex64, Vec<Complex64>)> = Vec::new();
        let mut discarded = 0.0;
        let mut sum = vec![0i32; n];
        for pa in &lhs {
            for pb in &rhs {
                let Some(first_b) = pb.entries.first() else { continue };
                let power = pa.power + pb.power;
                let rate = pa.rate + pb.rate;
                let slot = match outs
                    .iter()
                    .position(|(p, r, _)| *p == power && super::expoly::same_rate(*r, rate))
                {
                    Some(i) => i,
                    None => {
                        outs.push((power, rate, vec![Complex64::new(0.0, 0.0); size]));
                        outs.len() - 1
                    }
                };
                let grid = &mut outs[slot].2;
                for a in &pa.entries {
                    if a.abs * first_b.abs < skip {
                        break;
                    }
                    for b in &pb.entries {
                        let mag = a.abs * b.abs;
                        if mag < skip {
                            break;
                        }
                        if a.l1 + b.l1 > k_max {
                            for i in 0..n {
                                sum[i] = a.k[i] + b.k[i];
                            }
                            if sum.iter().map(|v| v.unsigned_abs()).sum::<u32>() > k_max {
                                discarded += mag;
                                continue;
                            }
                        }
                        grid[(a.idx + b.idx - origin) as usize] += a.c * b.c;
                    }
                }
            }
        }
        let mut acc: BTreeMap<usize, Vec<Term>> = BTreeMap::new();
        for (power, rate, grid) in outs {
            for (idx, c) in grid.into_iter().enumerate() {
                if c != Complex64::new(0.0, 0.0) {
                    acc.entry(idx).or_default().push(Term::new(c, power, rate));
                }
            }
        }
        for (idx, terms) in acc {
            let mut rem = idx as i64;
            let mut k = vec![0i32; n];
            for v in k.iter_mut().rev() {
                *v = (rem % side - k_max as i64) as i32;
                rem /= side;
            }
            let c = ExpPoly::from_canonical(canonicalize(terms));
            if !c.is_zero() {
                out.modes.insert(Mode(k), c);
            }
        }
        discarded
    }

    fn mul_sparse(&self, other: &Self, out: &mut Self, skip: f64) -> f64 {
        let k_max = out.k_max;
        let n = self.dim;
        let mut acc: HashMap<Vec<i32>, Vec<Term>> = HashMap::new();
        let mut key = vec![0i32; n];
        let mut discarded = 0.0;
        for (ka, ca) in &self.modes {
            for (kb, cb) in &other.modes {
                for i in 0..n {
                    key[i] = ka.0[i] + kb.0[i];
                }
                if key.iter().map(|v| v.unsigned_abs()).sum::<u32>() > k_max {
                    discarded += ca.abs_mass() * cb.abs_mass();
                    continue;
                }
                let cell = acc.entry(key.clone()).or_default();
                for ta in ca.terms() {
                    for tb in cb.terms() {
                        if ta.coeff.norm() * tb.coeff.norm() < skip {
                            continue;
                        }
                        merge_into(cell, Term::new(ta.coeff * tb.coeff, ta.power + tb.power, ta.rate + tb.rate));
                    }
                }
            }
        }
        for (k, terms) in acc {
            let c = ExpPoly::from_canonical(canonicalize(terms));
            if !c.is_zero() {
                out.modes.insert(Mode(k), c);
            }
        }
        discarded
    }

    pub fn mul(&self, other: &Self) -> Result<Self, SeriesError> {
        self.mul_report(other).map(|(s, _)| s)
    }

    /// `∂_{q_axis}`: mode `k` picks up `i·k_axis`.
    pub fn partial_q(&self, axis: usize) -> Self {
        let mut out = self.clone();
        out.modes = self
            .modes
            .iter()
            .filter(|(k, _)| k.component(axis) != 0)
            .map(|(k, c)| (k.clone(), c.scale(Complex64::new(0.0, k.component(axis) as f64))))
            .collect();
        out
    }

    /// `∂_ω = ⟨ω, ∂_q⟩`.
    pub fn partial_omega(&self, omega: &[f64]) -> Self {
        let mut out = self.clone();
        out.modes = self
            .modes
            .iter()
            .filter_map(|(k, c)| {
                let lambda = k.dot(omega);
                (lambda != 0.0).then(|| (k.clone(), c.scale(Complex64::new(0.0, lambda))))
            })
            .collect();
        out
    }

    pub fn partial_xi(&self) -> Self {
        let mut out = self.clone();
        out.modes = self
            .modes
            .iter()
            .map(|(k, c)| (k.clone(), c.derivative()))
            .filter(|(_, c)| !c.is_zero())
            .collect();
        out
    }

    /// Maps every coefficient independently, keeping the mode set.
    pub fn map_coeffs<E>(
        &self,
        mut f: impl FnMut(&Mode, &ExpPoly) -> Result<ExpPoly, E>,
    ) -> Result<Self, E> {
        let mut out = self.clone();
        out.modes.clear();
        for (k, c) in &self.modes {
            let v = f(k, c)?;
            if !v.is_zero() {
                out.modes.insert(k.clone(), v);
            }
        }
        Ok(out)
    }

    /// `Σ_k c_k(ξ) e^{i⟨k,q⟩}`.
    pub fn evaluate(&self, q: &[f64], xi: f64) -> Complex64 {
        self.modes
            .iter()
            .map(|(k, c)| c.eval(xi) * Complex64::from_polar(1.0, k.dot(q)))
            .sum()
    }

    /// Value together with the angle gradient, in one pass over the modes.
    pub fn evaluate_with_grad(&self, q: &[f64], xi: f64, grad: &mut [Complex64]) -> Complex64 {
        grad.iter_mut().for_each(|g| *g = Complex64::new(0.0, 0.0));
        let mut v = Complex64::new(0.0, 0.0);
        for (k, c) in &self.modes {
            let term = c.eval(xi) * Complex64::from_polar(1.0, k.dot(q));
            v += term;
            for (g, &kl) in grad.iter_mut().zip(&k.0) {
                if kl != 0 {
                    *g += term * Complex64::new(0.0, kl as f64);
                }
            }
        }
        v
    }

    /// Sum of `|c|` over every term of every mode.
    pub fn abs_mass(&self) -> f64 {
        self.modes.values().map(ExpPoly::abs_mass).sum()
    }

    pub fn to_doc(&self) -> SeriesDoc {
        SeriesDoc {
            dim: self.dim,
            k_modes: self.k_max,
            real: Some(self.real),
            modes: self
                .modes
                .iter()
                .map(|(k, c)| ModeDoc {
                    k: k.0.clone(),
                    terms: c.terms().iter().map(TermDoc::from).collect(),
                })
                .collect(),
        }
    }

    pub fn from_doc(doc: &SeriesDoc) -> Result<Self, SeriesError> {
        let mut s = Self::zero(doc.dim, doc.k_modes);
        for m in &doc.modes {
            if m.k.len() != doc.dim {
                return Err(SeriesError::DimensionMismatch {
                    left: doc.dim,
                    right: m.k.len(),
                });
            }
            let terms = m
                .terms
                .iter()
                .map(|t| Term::new(Complex64::new(t.re, t.im), t.m, Complex64::new(t.beta_re, t.beta_im)))
                .collect();
            let c = ExpPoly::from_terms(terms)?;
            let k = Mode(m.k.clone());
            if k.l1() > doc.k_modes {
                return Err(SeriesError::ModeOutOfRange { l1: k.l1(), k_max: doc.k_modes });
            }
            if !c.is_zero() {
                let slot = s.modes.entry(k).or_default();
                *slot = slot.add(&c);
            }
        }
        s.real = match doc.real {
            Some(r) => r,
            None => s.check_conjugate_symmetry(0.0),
        };
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_doc()).expect("series documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, SeriesError> {
        let doc: SeriesDoc = serde_json::from_str(text)?;
        Self::from_doc(&doc)
    }
}

/// JSON form `{dim, K_modes, modes:[{k:[...], terms:[...]}]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeriesDoc {
    pub dim: usize,
    #[serde(rename = "K_modes")]
    pub k_modes: u32,
    /// Conjugate-symmetry flag; inferred from exact symmetry when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub real: Option<bool>,
    pub modes: Vec<ModeDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModeDoc {
    pub k: Vec<i32>,
    pub terms: Vec<TermDoc>,
}

impl Serialize for FourierSeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_doc().serialize(s)
    }
}

impl<'de> Deserialize<'de> for FourierSeries {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = SeriesDoc::deserialize(d)?;
        FourierSeries::from_doc(&doc).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single(k: Vec<i32>, decay: f64) -> FourierSeries {
        FourierSeries::single(Mode(k), ExpPoly::decaying(c(1.0, 0.0), decay).unwrap(), 20)
    }

    #[test]
    fn additive_identity() {
        let s = single(vec![1, -2], 0.1);
        let z = FourierSeries::zero(2, 20);
        assert_eq!(s.add(&z).unwrap(), s);
    }

    #[test]
    fn conjugate_pair_is_cosine() {
        let a = 0.1;
        let s = single(vec![1], a).add(&single(vec![-1], a)).unwrap();
        assert!(s.check_conjugate_symmetry(0.0));
        for (q, xi) in [(0.3, 0.0), (2.0, 4.0), (-1.0, 11.0)] {
            let want = 2.0 * f64::cos(q) * (-a * xi).exp();
            let got = s.evaluate(&[q], xi);
            assert!((got.re - want).abs() < 1e-14 && got.im.abs() < 1e-14);
        }
    }

    #[test]
    fn multiplicative_identity_and_single_mode_square() {
        let a = 0.1;
        let s = single(vec![1], a);
        let one = FourierSeries::constant(1, 20, c(1.0, 0.0));
        assert_eq!(s.mul(&one).unwrap(), s);
        let sq = s.mul(&s).unwrap();
        assert_eq!(sq.len(), 1);
        let coeff = sq.coeff(&Mode(vec![2])).unwrap();
        assert_eq!(coeff.terms()[0].rate, c(-2.0 * a, 0.0));
        assert_eq!(coeff.terms()[0].coeff, c(1.0, 0.0));
    }

    #[test]
    fn truncation_reports_discarded_mass() {
        let s = FourierSeries::single(Mode(vec![3]), ExpPoly::constant(c(2.0, 0.0)), 4);
        let (p, lost) = s.mul_report(&s).unwrap();
        assert!(p.is_zero());
        assert_eq!(lost, 4.0);
    }

    #[test]
    fn partial_q_of_constant_vanishes() {
        let s = FourierSeries::constant(2, 10, c(3.0, 0.0));
        assert!(s.partial_q(0).is_zero());
        assert!(s.partial_xi().is_zero());
    }

    #[test]
    fn partial_q_matches_finite_differences() {
        let s = FourierSeries::single(Mode(vec![2, -1]), ExpPoly::decaying(c(0.7, 0.2), 0.1).unwrap(), 10);
        let q = [0.4, -1.3];
        let xi = 2.5;
        let h = 1e-6;
        for axis in 0..2 {
            let d = s.partial_q(axis).evaluate(&q, xi);
            let mut qp = q;
            let mut qm = q;
            qp[axis] += h;
            qm[axis] -= h;
            let fd = (s.evaluate(&qp, xi) - s.evaluate(&qm, xi)) / (2.0 * h);
            assert!((d - fd).norm() < 1e-6, "axis {axis}: {d} vs {fd}");
        }
        let dq0 = s.partial_q(0).coeff(&Mode(vec![2, -1])).unwrap().clone();
        assert_eq!(dq0.terms()[0].coeff, c(0.7, 0.2) * c(0.0, 2.0));
    }

    #[test]
    fn evaluate_zero_series() {
        assert_eq!(FourierSeries::zero(3, 5).evaluate(&[1.0, 2.0, 3.0], 0.5), c(0.0, 0.0));
    }

    #[test]
    fn json_roundtrip_exact() {
        let s = FourierSeries::cosine(Mode(vec![1, 1]), 0.123456789, 0.3, 0.1, 20)
            .unwrap()
            .mul(&single(vec![0, 1], 0.0712))
            .unwrap();
        let back = FourierSeries::from_json(&s.to_json()).unwrap();
        assert_eq!(back.to_json(), s.to_json());
        assert_eq!(back.modes().count(), s.modes().count());
        for ((k1, c1), (k2, c2)) in s.modes().zip(back.modes()) {
            assert_eq!(k1, k2);
            assert_eq!(c1, c2);
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = FourierSeries::zero(1, 3);
        let b = FourierSeries::zero(2, 3);
        assert!(matches!(a.add(&b), Err(SeriesError::DimensionMismatch { .. })));
    }
}
