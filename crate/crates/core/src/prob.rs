//! Finite-alphabet probability objects.
//!
//! A [`JointDist`] is a dense row-major tensor whose axes carry names; every
//! operation that touches axes addresses them by name, never by position.
//! [`CondDist`] is a row-stochastic matrix from one alphabet to another.
//! A conditioning alphabet that stands for several axes (e.g. `(U,S)`) has
//! size equal to the product of the axis sizes, letters enumerated row-major
//! in the listed order.

use serde::Serialize;

use crate::{Error, Result};

/// Total-mass tolerance for validated distributions.
pub const MASS_TOL: f64 = 1e-12;

/// Largest alphabet accepted anywhere; grid searches are exponential in it.
pub const MAX_ALPHABET: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Alphabet {
    name: String,
    size: usize,
}

impl Alphabet {
    pub fn new(name: impl Into<String>, size: usize) -> Result<Self> {
        let name = name.into();
        if size == 0 {
            return Err(Error::Dimension(format!("alphabet '{name}' has size 0")));
        }
        if size > MAX_ALPHABET {
            return Err(Error::Guard(format!(
                "alphabet '{name}' has size {size} > {MAX_ALPHABET}"
            )));
        }
        Ok(Self { name, size })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Product alphabet standing for the listed axes, letters in row-major order.
    pub fn product(parts: &[&Alphabet]) -> Self {
        let name = parts.iter().map(|a| a.name.as_str()).collect::<Vec<_>>().join(",");
        let size = parts.iter().map(|a| a.size).product::<usize>().max(1);
        Self { name, size }
    }
}

fn check_probs(what: &str, probs: &[f64]) -> Result<()> {
    for (i, &p) in probs.iter().enumerate() {
        if !p.is_finite() || !(-MASS_TOL..=1.0 + MASS_TOL).contains(&p) {
            return Err(Error::InvalidDistribution(format!(
                "{what}: entry {i} = {p} is not a probability"
            )));
        }
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > MASS_TOL {
        return Err(Error::InvalidDistribution(format!(
            "{what}: total mass {total} differs from 1 by more than {MASS_TOL:e}"
        )));
    }
    Ok(())
}

/// Probability vector on a named alphabet.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteDist {
    alphabet: Alphabet,
    probs: Vec<f64>,
}

impl FiniteDist {
    pub fn new(alphabet: Alphabet, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != alphabet.size {
            return Err(Error::Dimension(format!(
                "alphabet '{}' has {} letters but {} probabilities were given",
                alphabet.name,
                alphabet.size,
                probs.len()
            )));
        }
        check_probs(&format!("distribution on '{}'", alphabet.name), &probs)?;
        let probs = probs.into_iter().map(|p| p.max(0.0)).collect();
        Ok(Self { alphabet, probs })
    }

    pub fn uniform(alphabet: Alphabet) -> Self {
        let n = alphabet.size;
        Self { alphabet, probs: vec![1.0 / n as f64; n] }
    }

    pub fn point_mass(alphabet: Alphabet, letter: usize) -> Result<Self> {
        if letter >= alphabet.size {
            return Err(Error::Dimension(format!(
                "letter {letter} outside alphabet '{}' of size {}",
                alphabet.name, alphabet.size
            )));
        }
        let mut probs = vec![0.0; alphabet.size];
        probs[letter] = 1.0;
        Ok(Self { alphabet, probs })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn to_joint(&self) -> JointDist {
        JointDist { axes: vec![self.alphabet.clone()], probs: self.probs.clone() }
    }
}

/// Row-stochastic matrix `P(to | from)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CondDist {
    from: Alphabet,
    to: Alphabet,
    matrix: Vec<f64>,
}

impl CondDist {
    pub fn new(from: Alphabet, to: Alphabet, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != from.size {
            return Err(Error::Dimension(format!(
                "conditional '{}|{}' needs {} rows, got {}",
                to.name,
                from.name,
                from.size,
                rows.len()
            )));
        }
        let mut matrix = Vec::with_capacity(from.size * to.size);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != to.size {
                return Err(Error::Dimension(format!(
                    "row {i} of '{}|{}' has {} entries, expected {}",
                    to.name,
                    from.name,
                    row.len(),
                    to.size
                )));
            }
            check_probs(&format!("row {i} of '{}|{}'", to.name, from.name), &row)?;
            matrix.extend(row.into_iter().map(|p| p.max(0.0)));
        }
        Ok(Self { from, to, matrix })
    }

    /// Builds from a flat row-major matrix without validation beyond shape.
    /// Callers guarantee the rows are stochastic (used for search iterates).
    pub(crate) fn from_flat_unchecked(from: Alphabet, to: Alphabet, matrix: Vec<f64>) -> Self {
        debug_assert_eq!(matrix.len(), from.size * to.size);
        Self { from, to, matrix }
    }

    pub fn identity(from: Alphabet, to: Alphabet) -> Result<Self> {
        if from.size != to.size {
            return Err(Error::Dimension(format!(
                "identity map needs equal sizes ('{}' {} vs '{}' {})",
                from.name, from.size, to.name, to.size
            )));
        }
        let n = from.size;
        let mut matrix = vec![0.0; n * n];
        for i in 0..n {
            matrix[i * n + i] = 1.0;
        }
        Ok(Self { from, to, matrix })
    }

    /// Every row equal to `row`.
    pub fn constant(from: Alphabet, row: &FiniteDist) -> Self {
        let to = row.alphabet.clone();
        let matrix = (0..from.size).flat_map(|_| row.probs.iter().copied()).collect();
        Self { from, to, matrix }
    }

    pub fn from_alphabet(&self) -> &Alphabet {
        &self.from
    }

    pub fn to_alphabet(&self) -> &Alphabet {
        &self.to
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.to.size;
        &self.matrix[i * m..(i + 1) * m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.matrix.chunks(self.to.size)
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.matrix[from * self.to.size + to]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn row_dist(&self, i: usize) -> FiniteDist {
        FiniteDist { alphabet: self.to.clone(), probs: self.row(i).to_vec() }
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(|r| r.to_vec()).collect()
    }

    /// Same matrix with renamed alphabets.
    pub fn relabel(&self, from: &str, to: &str) -> Self {
        Self {
            from: Alphabet { name: from.to_string(), size: self.from.size },
            to: Alphabet { name: to.to_string(), size: self.to.size },
            matrix: self.matrix.clone(),
        }
    }

    /// Output distribution when the input is drawn from `input`.
    pub fn push_forward(&self, input: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.to.size];
        for (x, &px) in input.iter().enumerate() {
            if px == 0.0 {
                continue;
            }
            for (o, &w) in out.iter_mut().zip(self.row(x)) {
                *o += px * w;
            }
        }
        out
    }
}

/// Result of [`JointDist::condition`].
#[derive(Debug, Clone, PartialEq)]
pub struct Conditioned {
    pub cond: CondDist,
    /// Conditioning letters with zero mass; their rows were filled uniformly.
    pub zero_rows: Vec<usize>,
}

/// Labeled probability tensor, row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointDist {
    axes: Vec<Alphabet>,
    probs: Vec<f64>,
}

impl JointDist {
    pub fn new(axes: Vec<Alphabet>, probs: Vec<f64>) -> Result<Self> {
        check_unique(&axes)?;
        let cells: usize = axes.iter().map(|a| a.size).product();
        if probs.len() != cells {
            return Err(Error::Dimension(format!(
                "joint over {} has {cells} cells but {} probabilities were given",
                axis_list(&axes),
                probs.len()
            )));
        }
        check_probs(&format!("joint over {}", axis_list(&axes)), &probs)?;
        let probs = probs.into_iter().map(|p| p.max(0.0)).collect();
        Ok(Self { axes, probs })
    }

    /// Renormalises instead of validating; for solver iterates whose mass
    /// drifts by rounding only.
    pub(crate) fn from_raw(axes: Vec<Alphabet>, probs: Vec<f64>) -> Self {
        let total: f64 = probs.iter().sum();
        let probs = if total > 0.0 { probs.into_iter().map(|p| p.max(0.0) / total).collect() } else { probs };
        Self { axes, probs }
    }

    /// Joint with rows given as a matrix over `(a, b)`.
    pub fn from_matrix(a: Alphabet, b: Alphabet, rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() != a.size || rows.iter().any(|r| r.len() != b.size) {
            return Err(Error::Dimension(format!(
                "matrix for ({}, {}) must be {}x{}",
                a.name, b.name, a.size, b.size
            )));
        }
        Self::new(vec![a, b], rows.iter().flatten().copied().collect())
    }

    /// Independent product `a x b`.
    pub fn product(a: &JointDist, b: &JointDist) -> Result<Self> {
        let mut axes = a.axes.clone();
        axes.extend(b.axes.iter().cloned());
        check_unique(&axes)?;
        let mut probs = Vec::with_capacity(a.probs.len() * b.probs.len());
        for &pa in &a.probs {
            probs.extend(b.probs.iter().map(|&pb| pa * pb));
        }
        Ok(Self { axes, probs })
    }

    pub fn axes(&self) -> &[Alphabet] {
        &self.axes
    }

    pub fn axis_names(&self) -> Vec<&str> {
        self.axes.iter().map(|a| a.name.as_str()).collect()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn axis_index(&self, name: &str) -> Result<usize> {
        self.axes.iter().position(|a| a.name == name).ok_or_else(|| {
            Error::Dimension(format!("axis '{name}' not in joint over {}", axis_list(&self.axes)))
        })
    }

    pub fn axis(&self, name: &str) -> Result<&Alphabet> {
        Ok(&self.axes[self.axis_index(name)?])
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.axes.len()];
        for k in (0..self.axes.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.axes[k + 1].size;
        }
        strides
    }

    /// For every cell, its flat index in the sub-tensor over `names`
    /// (row-major in the order given). Empty `names` maps everything to 0.
    pub fn index_map(&self, names: &[&str]) -> Result<Vec<usize>> {
        let positions = names.iter().map(|n| self.axis_index(n)).collect::<Result<Vec<_>>>()?;
        let mut seen = positions.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != positions.len() {
            return Err(Error::Dimension(format!("repeated axis in {names:?}")));
        }
        let strides = self.strides();
        let sub_sizes: Vec<usize> = positions.iter().map(|&p| self.axes[p].size).collect();
        let mut sub_strides = vec![1; positions.len()];
        for k in (0..positions.len().saturating_sub(1)).rev() {
            sub_strides[k] = sub_strides[k + 1] * sub_sizes[k + 1];
        }
        Ok((0..self.probs.len())
            .map(|cell| {
                positions
                    .iter()
                    .zip(&sub_strides)
                    .map(|(&p, &s)| ((cell / strides[p]) % self.axes[p].size) * s)
                    .sum()
            })
            .collect())
    }

    /// Sizes of the listed axes.
    pub fn sizes(&self, names: &[&str]) -> Result<Vec<usize>> {
        names.iter().map(|n| Ok(self.axis(n)?.size)).collect()
    }

    /// Sum out every axis not in `keep`; result axes follow `keep`'s order.
    pub fn marginalize(&self, keep: &[&str]) -> Result<JointDist> {
        let map = self.index_map(keep)?;
        let axes: Vec<Alphabet> = keep.iter().map(|n| self.axis(n).cloned()).collect::<Result<_>>()?;
        let size: usize = axes.iter().map(|a| a.size).product();
        let mut probs = vec![0.0; size];
        for (cell, &p) in self.probs.iter().enumerate() {
            probs[map[cell]] += p;
        }
        Ok(JointDist { axes, probs })
    }

    /// Marginal over a single axis as a [`FiniteDist`].
    pub fn marginal(&self, name: &str) -> Result<FiniteDist> {
        let j = self.marginalize(&[name])?;
        Ok(FiniteDist { alphabet: j.axes[0].clone(), probs: j.probs })
    }

    /// Appends `cond.to` as a new axis drawn from `cond` given `on_axes`.
    pub fn compose(&self, cond: &CondDist, on_axes: &[&str]) -> Result<JointDist> {
        let map = self.index_map(on_axes)?;
        let from_size: usize = self.sizes(on_axes)?.iter().product();
        if from_size != cond.from.size {
            return Err(Error::Dimension(format!(
                "conditional '{}|{}' expects {} conditioning letters but axes {:?} give {}",
                cond.to.name, cond.from.name, cond.from.size, on_axes, from_size
            )));
        }
        if self.axes.iter().any(|a| a.name == cond.to.name) {
            return Err(Error::Dimension(format!("axis '{}' already present", cond.to.name)));
        }
        let m = cond.to.size;
        let mut probs = Vec::with_capacity(self.probs.len() * m);
        for (cell, &p) in self.probs.iter().enumerate() {
            probs.extend(cond.row(map[cell]).iter().map(|&w| p * w));
        }
        let mut axes = self.axes.clone();
        axes.push(cond.to.clone());
        Ok(JointDist { axes, probs })
    }

    /// `P(target | given)`; zero-mass conditioning letters get uniform rows
    /// and are listed in [`Conditioned::zero_rows`].
    pub fn condition(&self, target: &str, given: &[&str]) -> Result<Conditioned> {
        if given.contains(&target) {
            return Err(Error::Dimension(format!("'{target}' cannot condition on itself")));
        }
        let mut keep: Vec<&str> = given.to_vec();
        keep.push(target);
        let joint = self.marginalize(&keep)?;
        let to = self.axis(target)?.clone();
        let given_axes: Vec<&Alphabet> = given.iter().map(|n| self.axis(n)).collect::<Result<_>>()?;
        let from = Alphabet::product(&given_axes);
        let m = to.size;
        let mut matrix = Vec::with_capacity(from.size * m);
        let mut zero_rows = Vec::new();
        for (g, chunk) in joint.probs.chunks(m).enumerate() {
            let mass: f64 = chunk.iter().sum();
            if mass > 0.0 {
                matrix.extend(chunk.iter().map(|&p| p / mass));
            } else {
                zero_rows.push(g);
                matrix.extend(std::iter::repeat_n(1.0 / m as f64, m));
            }
        }
        Ok(Conditioned { cond: CondDist { from, to, matrix }, zero_rows })
    }

    /// Reorders axes to `order` (a permutation of the current names).
    pub fn permute(&self, order: &[&str]) -> Result<JointDist> {
        if order.len() != self.axes.len() {
            return Err(Error::Dimension(format!(
                "permutation {order:?} does not cover {}",
                axis_list(&self.axes)
            )));
        }
        self.marginalize(order)
    }

    pub fn rename_axis(&self, from: &str, to: &str) -> Result<JointDist> {
        let k = self.axis_index(from)?;
        if from != to && self.axes.iter().any(|a| a.name == to) {
            return Err(Error::Dimension(format!("axis '{to}' already present")));
        }
        let mut out = self.clone();
        out.axes[k].name = to.to_string();
        Ok(out)
    }

    /// Same axes with new cell values (renormalised).
    pub(crate) fn with_probs(&self, probs: Vec<f64>) -> JointDist {
        JointDist::from_raw(self.axes.clone(), probs)
    }

    pub(crate) fn same_axes(&self, other: &JointDist) -> Result<()> {
        if self.axes != other.axes {
            return Err(Error::Dimension(format!(
                "axes differ: {} vs {}",
                axis_list(&self.axes),
                axis_list(&other.axes)
            )));
        }
        Ok(())
    }
}

fn check_unique(axes: &[Alphabet]) -> Result<()> {
    for (i, a) in axes.iter().enumerate() {
        if axes[..i].iter().any(|b| b.name == a.name) {
            return Err(Error::Dimension(format!("duplicate axis name '{}'", a.name)));
        }
    }
    Ok(())
}

fn axis_list(axes: &[Alphabet]) -> String {
    let names: Vec<&str> = axes.iter().map(|a| a.name.as_str()).collect();
    format!("({})", names.join(","))
}

/// Free-function form of [`JointDist::compose`].
pub fn compose(base: &JointDist, cond: &CondDist, on_axes: &[&str]) -> Result<JointDist> {
    base.compose(cond, on_axes)
}

/// Free-function form of [`JointDist::marginalize`].
pub fn marginalize(j: &JointDist, keep: &[&str]) -> Result<JointDist> {
    j.marginalize(keep)
}

/// Free-function form of [`JointDist::condition`].
pub fn condition(j: &JointDist, target: &str, given: &[&str]) -> Result<Conditioned> {
    j.condition(target, given)
}

/// Number of lattice points per unit for a grid step; `1/step` must be an integer.
pub fn lattice_resolution(step: f64) -> Result<usize> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::Domain(format!("grid step {step} outside (0, 1]")));
    }
    let n = (1.0 / step).round();
    if (n * step - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("grid step {step} does not divide 1")));
    }
    Ok(n as usize)
}

/// Lattice points `k/n` on the `dim`-simplex, first coordinate descending.
pub fn simplex_points(dim: usize, n: usize) -> Vec<Vec<f64>> {
    fn rec(dim: usize, left: usize, n: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if prefix.len() + 1 == dim {
            prefix.push(left);
            out.push(prefix.iter().map(|&k| k as f64 / n as f64).collect());
            prefix.pop();
            return;
        }
        for k in (0..=left).rev() {
            prefix.push(k);
            rec(dim, left - k, n, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if dim == 0 {
        return out;
    }
    rec(dim, n, n, &mut Vec::with_capacity(dim), &mut out);
    out
}

/// Number of lattice points, `C(n + dim - 1, dim - 1)`.
pub fn simplex_count(dim: usize, n: usize) -> usize {
    let mut c: u128 = 1;
    for i in 0..(dim.saturating_sub(1)) {
        c = c * (n + 1 + i) as u128 / (i + 1) as u128;
    }
    c.min(usize::MAX as u128) as usize
}

/// All lattice distributions with entries multiple of `step`.
pub fn simplex_grid(dim: usize, step: f64) -> Result<Vec<FiniteDist>> {
    let n = lattice_resolution(step)?;
    let alphabet = Alphabet::new("grid", dim)?;
    Ok(simplex_points(dim, n)
        .into_iter()
        .map(|probs| FiniteDist { alphabet: alphabet.clone(), probs })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab(name: &str, n: usize) -> Alphabet {
        Alphabet::new(name, n).unwrap()
    }

    fn example1_puv() -> JointDist {
        let pu = FiniteDist::new(ab("U", 2), vec![0.5, 0.5]).unwrap().to_joint();
        let pv_u = CondDist::new(ab("U", 2), ab("V", 2), vec![vec![0.2, 0.8], vec![0.8, 0.2]]).unwrap();
        pu.compose(&pv_u, &["U"]).unwrap()
    }

    #[test]
    fn compose_identity_copies_marginal() {
        let puv = example1_puv();
        let id = CondDist::identity(ab("U", 2), ab("X", 2)).unwrap();
        let j = puv.compose(&id, &["U"]).unwrap();
        assert_eq!(j.marginal("X").unwrap().probs(), &[0.5, 0.5]);
        assert_eq!(j.marginal("V").unwrap().probs(), &[0.5, 0.5]);
    }

    #[test]
    fn compose_constant_map_gives_point_mass() {
        let puv = example1_puv();
        let c = CondDist::constant(Alphabet::product(&[&ab("U", 2)]), &FiniteDist::point_mass(ab("W", 3), 1).unwrap());
        let j = puv.compose(&c, &["U"]).unwrap();
        assert_eq!(j.marginal("W").unwrap().probs(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn compose_rejects_mismatch() {
        let puv = example1_puv();
        let bad = CondDist::identity(ab("A", 3), ab("X", 3)).unwrap();
        assert!(matches!(puv.compose(&bad, &["U"]), Err(Error::Dimension(_))));
        let dup = CondDist::identity(ab("U", 2), ab("V", 2)).unwrap();
        assert!(matches!(puv.compose(&dup, &["U"]), Err(Error::Dimension(_))));
    }

    #[test]
    fn marginalize_product_and_identity() {
        let p = FiniteDist::new(ab("A", 3), vec![0.2, 0.3, 0.5]).unwrap().to_joint();
        let q = FiniteDist::new(ab("B", 2), vec![0.9, 0.1]).unwrap().to_joint();
        let pq = JointDist::product(&p, &q).unwrap();
        for (a, b) in pq.marginalize(&["A"]).unwrap().probs().iter().zip(p.probs()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(pq.marginalize(&["A", "B"]).unwrap(), pq);
        assert!(matches!(pq.marginalize(&["C"]), Err(Error::Dimension(_))));
    }

    #[test]
    fn example1_side_information_is_uniform() {
        let puv = example1_puv();
        assert_eq!(puv.marginal("V").unwrap().probs(), &[0.5, 0.5]);
    }

    #[test]
    fn condition_round_trip() {
        let puv = example1_puv();
        let c = puv.condition("V", &["U"]).unwrap();
        assert!(c.zero_rows.is_empty());
        assert_eq!(c.cond.to_rows(), vec![vec![0.2, 0.8], vec![0.8, 0.2]]);
        let back = puv.marginalize(&["U"]).unwrap().compose(&c.cond.relabel("U", "V"), &["U"]).unwrap();
        for (a, b) in back.probs().iter().zip(puv.probs()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn condition_product_rows_equal_marginal() {
        let p = FiniteDist::new(ab("A", 2), vec![0.3, 0.7]).unwrap().to_joint();
        let q = FiniteDist::new(ab("B", 3), vec![0.1, 0.6, 0.3]).unwrap().to_joint();
        let c = JointDist::product(&p, &q).unwrap().condition("B", &["A"]).unwrap();
        for row in c.cond.rows() {
            for (a, b) in row.iter().zip(q.probs()) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn condition_flags_zero_rows() {
        let j = JointDist::from_matrix(ab("A", 2), ab("B", 2), &[vec![0.4, 0.6], vec![0.0, 0.0]]).unwrap();
        let c = j.condition("B", &["A"]).unwrap();
        assert_eq!(c.zero_rows, vec![1]);
        assert_eq!(c.cond.row(1), &[0.5, 0.5]);
    }

    #[test]
    fn example1_uncoded_condition_mass() {
        // P_UVY with X = U through BSC(0.2); condition Y on V and recompose.
        let puv = example1_puv();
        let bsc = CondDist::new(ab("U", 2), ab("Y", 2), vec![vec![0.8, 0.2], vec![0.2, 0.8]]).unwrap();
        let puvy = puv.compose(&bsc, &["U"]).unwrap();
        let c = puvy.condition("Y", &["V"]).unwrap();
        let back = puvy.marginalize(&["V"]).unwrap().compose(&c.cond, &["V"]).unwrap();
        let direct = puvy.marginalize(&["V", "Y"]).unwrap();
        let total: f64 = back.probs().iter().sum();
        assert!((total - 1.0).abs() <= 1e-12);
        for (a, b) in back.probs().iter().zip(direct.probs()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn simplex_grid_examples() {
        let g: Vec<Vec<f64>> = simplex_grid(2, 0.5).unwrap().iter().map(|d| d.probs().to_vec()).collect();
        assert_eq!(g, vec![vec![1.0, 0.0], vec![0.5, 0.5], vec![0.0, 1.0]]);
        assert_eq!(simplex_grid(3, 0.5).unwrap().len(), 6);
        assert_eq!(simplex_grid(2, 0.25).unwrap().len(), 5);
        assert_eq!(simplex_count(3, 20), 231);
        assert!(simplex_grid(2, 0.0).is_err());
    }

    #[test]
    fn validation_errors() {
        assert!(FiniteDist::new(ab("A", 2), vec![0.5, 0.6]).is_err());
        assert!(FiniteDist::new(ab("A", 2), vec![1.0]).is_err());
        assert!(Alphabet::new("big", 17).is_err());
        assert!(JointDist::new(vec![ab("A", 2), ab("A", 2)], vec![0.25; 4]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn normalized(raw: Vec<f64>) -> Vec<f64> {
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect()
        }

        proptest! {
            #[test]
            fn condition_compose_round_trip(raw in proptest::collection::vec(0.01f64..1.0, 12)) {
                let j = JointDist::new(vec![ab("A", 2), ab("B", 3), ab("C", 2)], normalized(raw)).unwrap();
                let c = j.condition("B", &["C", "A"]).unwrap();
                let back = j.marginalize(&["C", "A"]).unwrap().compose(&c.cond, &["C", "A"]).unwrap();
                let direct = j.marginalize(&["C", "A", "B"]).unwrap();
                for (a, b) in back.probs().iter().zip(direct.probs()) {
                    prop_assert!((a - b).abs() <= 1e-12);
                }
            }

            #[test]
            fn marginalize_commutes_with_reorder(raw in proptest::collection::vec(0.01f64..1.0, 12)) {
                let j = JointDist::new(vec![ab("A", 2), ab("B", 3), ab("C", 2)], normalized(raw)).unwrap();
                let direct = j.marginalize(&["C", "A"]).unwrap();
                let via = j.permute(&["C", "B", "A"]).unwrap().marginalize(&["C", "A"]).unwrap();
                prop_assert_eq!(direct.probs(), via.probs());
            }

            #[test]
            fn simplex_count_matches(dim in 1usize..5, n in 1usize..12) {
                prop_assert_eq!(simplex_points(dim, n).len(), simplex_count(dim, n));
            }
        }
    }
}
