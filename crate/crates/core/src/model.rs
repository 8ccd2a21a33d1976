//! Model specification and the linear algebra of the background chain.
//!
//! A [`ModelSpec`] is the raw problem input: a generator `Q` for the
//! background process, arrival rates `lambda`, service rates `mu`, the
//! departure discipline ([`Variant`]) and the law of the initial state.
//! [`validate`] checks it once and returns a [`Model`] that caches the
//! derived quantities every other module relies on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-12;

/// Departure discipline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// Each job's hazard follows the current background state.
    ModelI,
    /// Each job's hazard is fixed by the background state at its arrival.
    ModelII,
}

/// Law of the background state at time zero. State indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitialLaw {
    Fixed(usize),
    Stationary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    /// Generator rows, `q[i][j]` is the rate from `i` to `j`.
    pub q: Vec<Vec<f64>>,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub variant: Variant,
    pub initial: InitialLaw,
}

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    /// Row vector times matrix.
    pub fn left_mul(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for j in 0..n {
                out[j] += vi * self.data[i * n + j];
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryLaw {
    pub pi: Vec<f64>,
}

/// A validated model with cached derived quantities.
#[derive(Debug, Clone)]
pub struct Model {
    spec: ModelSpec,
    q: Matrix,
    exit: Vec<f64>,
    groups: Vec<Vec<usize>>,
    stationary: StationaryLaw,
}

/// Check a [`ModelSpec`] and cache exit rates, duplicate groups and the
/// stationary law.
pub fn validate(spec: ModelSpec) -> Result<Model> {
    let d = spec.q.len();
    if d == 0 {
        return Err(Error::Dimension("model needs at least one state".into()));
    }
    if spec.q.iter().any(|row| row.len() != d) {
        return Err(Error::Dimension(format!("Q must be {d}x{d}")));
    }
    if spec.lambda.len() != d || spec.mu.len() != d {
        return Err(Error::Dimension(format!(
            "lambda and mu must have length {d}"
        )));
    }
    let mut q = Matrix::zeros(d);
    for (i, row) in spec.q.iter().enumerate() {
        let mut sum = 0.0;
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonGenerator(format!("Q[{i}][{j}] is not finite")));
            }
            if i != j && v < 0.0 {
                return Err(Error::NonGenerator(format!(
                    "off-diagonal Q[{i}][{j}] = {v} is negative"
                )));
            }
            q[(i, j)] = v;
            sum += v;
        }
        if sum.abs() > ROW_SUM_TOL {
            return Err(Error::NonGenerator(format!("row {i} sums to {sum}")));
        }
    }
    for (i, &l) in spec.lambda.iter().enumerate() {
        if !(l >= 0.0 && l.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "arrival rate lambda[{i}] = {l} must be finite and non-negative"
            )));
        }
    }
    for (i, &m) in spec.mu.iter().enumerate() {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::NonpositiveService(i, m));
        }
    }
    if let InitialLaw::Fixed(i0) = spec.initial {
        if i0 >= d {
            return Err(Error::Dimension(format!("initial state {i0} out of range")));
        }
    }
    check_irreducible(&q)?;

    let exit = (0..d).map(|i| -q[(i, i)]).collect();
    let groups = group_duplicates(&spec.lambda, &spec.mu);
    let stationary = solve_stationary(&q)?;
    Ok(Model {
        spec,
        q,
        exit,
        groups,
        stationary,
    })
}

fn check_irreducible(q: &Matrix) -> Result<()> {
    let d = q.dim();
    for transpose in [false, true] {
        let mut seen = vec![false; d];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..d {
                let rate = if transpose { q[(j, i)] } else { q[(i, j)] };
                if i != j && rate > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Reducible(missing));
        }
    }
    Ok(())
}

fn group_duplicates(lambda: &[f64], mu: &[f64]) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..lambda.len() {
        match groups
            .iter_mut()
            .find(|g| lambda[g[0]] == lambda[i] && mu[g[0]] == mu[i])
        {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    groups
}

/// Solve `pi Q = 0`, `sum pi = 1` by replacing the last balance equation
/// with the normalization and eliminating with partial pivoting.
fn solve_stationary(q: &Matrix) -> Result<StationaryLaw> {
    let d = q.dim();
    // Augmented system A x = b with A = Q^T, last row all ones.
    let mut a = vec![vec![0.0; d + 1]; d];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().take(d).enumerate() {
            *v = if i == d - 1 { 1.0 } else { q[(j, i)] };
        }
    }
    a[d - 1][d] = 1.0;
    for col in 0..d {
        let pivot = (col..d)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::Singular);
        }
        a.swap(col, pivot);
        for r in col + 1..d {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..=d {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let mut pi = vec![0.0; d];
    for r in (0..d).rev() {
        let s: f64 = (r + 1..d).map(|c| a[r][c] * pi[c]).sum();
        pi[r] = (a[r][d] - s) / a[r][r];
    }
    // Clean rounding noise so the law is a probability vector.
    for p in &mut pi {
        if *p < 0.0 && *p > -1e-13 {
            *p = 0.0;
        }
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= total);
    if pi.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::Singular);
    }
    Ok(StationaryLaw { pi })
}

impl Model {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn d(&self) -> usize {
        self.q.dim()
    }

    pub fn generator(&self) -> &Matrix {
        &self.q
    }

    /// Transition rate `q_ij`.
    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.q[(i, j)]
    }

    /// Exit rate `q_i = -q_ii`.
    pub fn exit_rate(&self, i: usize) -> f64 {
        self.exit[i]
    }

    pub fn exit_rates(&self) -> &[f64] {
        &self.exit
    }

    pub fn lambda(&self) -> &[f64] {
        &self.spec.lambda
    }

    pub fn mu(&self) -> &[f64] {
        &self.spec.mu
    }

    pub fn variant(&self) -> Variant {
        self.spec.variant
    }

    pub fn initial(&self) -> InitialLaw {
        self.spec.initial
    }

    pub fn stationary(&self) -> &StationaryLaw {
        &self.stationary
    }

    /// Probability vector of the initial state.
    pub fn initial_weights(&self) -> Vec<f64> {
        self.weights_for(self.spec.initial)
    }

    pub fn weights_for(&self, law: InitialLaw) -> Vec<f64> {
        match law {
            InitialLaw::Fixed(i0) => {
                let mut w = vec![0.0; self.d()];
                w[i0] = 1.0;
                w
            }
            InitialLaw::Stationary => self.stationary.pi.clone(),
        }
    }

    /// Partition of the states by identical `(lambda_i, mu_i)`.
    pub fn duplicate_groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// The group containing state `i`.
    pub fn group_of(&self, i: usize) -> &[usize] {
        self.groups
            .iter()
            .find(|g| g.contains(&i))
            .expect("every state belongs to a group")
    }

    /// Copy of this model with another departure discipline.
    pub fn with_variant(&self, variant: Variant) -> Model {
        let mut m = self.clone();
        m.spec.variant = variant;
        m
    }

    /// Copy of this model with another initial law.
    pub fn with_initial(&self, initial: InitialLaw) -> Result<Model> {
        if let InitialLaw::Fixed(i0) = initial {
            if i0 >= self.d() {
                return Err(Error::Dimension(format!("initial state {i0} out of range")));
            }
        }
        let mut m = self.clone();
        m.spec.initial = initial;
        Ok(m)
    }

    /// `e^{Qt}` by uniformization, with scaling and squaring once the
    /// uniformization rate times `t` gets large.
    pub fn transient_matrix(&self, t: f64) -> Result<Matrix> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "time {t} must be finite and >= 0"
            )));
        }
        let d = self.d();
        let rate = self.exit.iter().cloned().fold(0.0, f64::max);
        if rate == 0.0 || t == 0.0 {
            return Ok(Matrix::identity(d));
        }
        let mut squarings = 0u32;
        let mut tau = t;
        while rate * tau > 8.0 {
            tau *= 0.5;
            squarings += 1;
        }
        let mut step = Matrix::identity(d);
        for i in 0..d {
            for j in 0..d {
                step[(i, j)] += self.q[(i, j)] / rate;
            }
        }
        let x = rate * tau;
        let mut weight = (-x).exp();
        let mut cumulative = weight;
        let mut power = Matrix::identity(d);
        let mut result = Matrix::identity(d);
        result.data.iter_mut().for_each(|v| *v *= weight);
        let mut k = 0u32;
        while 1.0 - cumulative > 1e-15 && k < 200 {
            k += 1;
            weight *= x / k as f64;
            cumulative += weight;
            power = power.matmul(&step);
            for (r, p) in result.data.iter_mut().zip(&power.data) {
                *r += weight * p;
            }
        }
        for _ in 0..squarings {
            result = result.matmul(&result);
        }
        Ok(result)
    }
}
