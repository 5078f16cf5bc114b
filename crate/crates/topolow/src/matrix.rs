//! Dissimilarity data model: possibly sparse, asymmetric, censored matrices.
//!
//! A [`DissimilarityMatrix`] is an m x m grid of [`ObservationCell`]s over a
//! list of labelled objects. Cells above and below the diagonal are
//! independent observations, so asymmetric data round-trips untouched.
//! Censoring is carried per cell: a threshold measurement like "< 10" stays a
//! one-sided constraint instead of being coerced to a number.

use ndarray::Array2;

use crate::error::{Result, TopolowError};

/// One cell of a dissimilarity matrix.
///
/// `LeftCensored(c)` means the true value is known to lie below `c`;
/// `RightCensored(c)` means it lies above `c`. Thresholds and exact values
/// must be finite and non-negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObservationCell {
    Missing,
    Exact(f64),
    LeftCensored(f64),
    RightCensored(f64),
}

impl ObservationCell {
    pub fn is_missing(&self) -> bool {
        matches!(self, ObservationCell::Missing)
    }

    pub fn is_observed(&self) -> bool {
        !self.is_missing()
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, ObservationCell::Exact(_))
    }

    pub fn is_censored(&self) -> bool {
        matches!(
            self,
            ObservationCell::LeftCensored(_) | ObservationCell::RightCensored(_)
        )
    }

    /// Measured value or censoring threshold; `None` when missing.
    pub fn magnitude(&self) -> Option<f64> {
        match self {
            ObservationCell::Missing => None,
            ObservationCell::Exact(v)
            | ObservationCell::LeftCensored(v)
            | ObservationCell::RightCensored(v) => Some(*v),
        }
    }

    fn check_finite_nonnegative(&self) -> std::result::Result<(), String> {
        match self.magnitude() {
            None => Ok(()),
            Some(v) if !v.is_finite() => Err(format!("non-finite value {v}")),
            Some(v) if v < 0.0 => Err(format!("negative value {v}")),
            Some(_) => Ok(()),
        }
    }
}

/// Structural summary produced by [`DissimilarityMatrix::validate`].
///
/// Negative values are hard errors; asymmetry and triangle-inequality
/// violations are informational, since the embedding is designed to absorb
/// them.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub objects: usize,
    /// Directed off-diagonal cells that are not missing.
    pub observed_cells: usize,
    pub exact_cells: usize,
    pub censored_cells: usize,
    /// Hard errors: observed cells with a negative value or threshold.
    pub negative_values: usize,
    /// Unordered pairs observed in both directions with differing cells.
    pub asymmetric_pairs: usize,
    /// Unordered triples with all three sides exact that violate the
    /// triangle inequality in at least one orientation.
    pub triangle_violations: usize,
    pub triangles_checked: usize,
    /// Connected components of the observation graph.
    pub components: usize,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.negative_values == 0
    }

    pub fn is_connected(&self) -> bool {
        self.components == 1
    }
}

/// Monotone map applied to similarity scores before conversion to
/// dissimilarities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimilarityTransform {
    Identity,
    /// Logarithm with the given base (base 2 suits two-fold dilution assays).
    Log { base: f64 },
}

impl SimilarityTransform {
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            SimilarityTransform::Identity => x,
            SimilarityTransform::Log { base } => x.ln() / base.ln(),
        }
    }

    pub fn requires_positive(&self) -> bool {
        matches!(self, SimilarityTransform::Log { .. })
    }
}

impl std::str::FromStr for SimilarityTransform {
    type Err = TopolowError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "identity" => Ok(SimilarityTransform::Identity),
            "ln" => Ok(SimilarityTransform::Log {
                base: std::f64::consts::E,
            }),
            "log2" => Ok(SimilarityTransform::Log { base: 2.0 }),
            "log10" => Ok(SimilarityTransform::Log { base: 10.0 }),
            other => {
                if let Some(b) = other.strip_prefix("log:") {
                    let base: f64 = b.parse().map_err(|_| {
                        TopolowError::parse("transform", format!("bad log base {b:?}"))
                    })?;
                    if !base.is_finite() || base <= 0.0 || base == 1.0 {
                        return Err(TopolowError::Invalid(format!(
                            "log base must be positive and != 1, got {base}"
                        )));
                    }
                    Ok(SimilarityTransform::Log { base })
                } else {
                    Err(TopolowError::parse(
                        "transform",
                        format!("unknown transform {other:?} (expected identity, ln, log2, log10, or log:<base>)"),
                    ))
                }
            }
        }
    }
}

/// Raw similarity scores (larger = more alike), possibly sparse and
/// asymmetric. Censored similarities are not representable; convert on the
/// dissimilarity side instead.
#[derive(Debug, Clone)]
pub struct SimilarityMatrix {
    labels: Vec<String>,
    values: Array2<Option<f64>>,
}

impl SimilarityMatrix {
    pub fn new(labels: Vec<String>, values: Array2<Option<f64>>) -> Result<Self> {
        check_labels(&labels, values.nrows(), values.ncols())?;
        for v in values.iter().flatten() {
            if !v.is_finite() {
                return Err(TopolowError::Invalid(format!(
                    "non-finite similarity {v}"
                )));
            }
        }
        Ok(SimilarityMatrix { labels, values })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn values(&self) -> &Array2<Option<f64>> {
        &self.values
    }

    /// Converts similarities to dissimilarities against each column's
    /// maximum: `D[i][j] = f(max_k S[k][j]) - f(S[i][j])`.
    ///
    /// The column maximum plays the role of the highest attainable score for
    /// that object, so the cell holding it maps to distance exactly zero.
    /// Rescaling all scores, or composing `f` with a constant shift, leaves
    /// the output unchanged.
    pub fn to_dissimilarity(&self, transform: SimilarityTransform) -> Result<DissimilarityMatrix> {
        if transform.requires_positive() {
            for ((i, j), v) in self.values.indexed_iter() {
                if let Some(v) = v {
                    if *v <= 0.0 {
                        return Err(TopolowError::Invalid(format!(
                            "similarity at ({}, {}) is {v}; logarithmic transforms need positive scores",
                            self.labels[i], self.labels[j]
                        )));
                    }
                }
            }
        }
        self.to_dissimilarity_with(|x| transform.apply(x))
    }

    /// Same conversion with an arbitrary monotone increasing map `f`.
    pub fn to_dissimilarity_with<F: Fn(f64) -> f64>(&self, f: F) -> Result<DissimilarityMatrix> {
        let m = self.len();
        let mut col_max: Vec<Option<f64>> = vec![None; m];
        for j in 0..m {
            for i in 0..m {
                if let Some(v) = self.values[(i, j)] {
                    col_max[j] = Some(col_max[j].map_or(v, |c: f64| c.max(v)));
                }
            }
        }
        let mut cells = Array2::from_elem((m, m), ObservationCell::Missing);
        for j in 0..m {
            let Some(cm) = col_max[j] else { continue };
            let fcm = f(cm);
            for i in 0..m {
                if let Some(v) = self.values[(i, j)] {
                    let d = fcm - f(v);
                    if !d.is_finite() {
                        return Err(TopolowError::Numeric(format!(
                            "transform produced {d} at ({}, {})",
                            self.labels[i], self.labels[j]
                        )));
                    }
                    cells[(i, j)] = ObservationCell::Exact(d);
                }
            }
        }
        DissimilarityMatrix::new(self.labels.clone(), cells)
    }
}

/// An m x m dissimilarity matrix over labelled objects.
///
/// Invariants enforced at construction: m >= 2, unique labels, all observed
/// values finite and non-negative, diagonal cells exactly zero (missing
/// diagonal cells are normalized to `Exact(0)`).
#[derive(Debug, Clone)]
pub struct DissimilarityMatrix {
    labels: Vec<String>,
    cells: Array2<ObservationCell>,
}

impl DissimilarityMatrix {
    pub fn new(labels: Vec<String>, mut cells: Array2<ObservationCell>) -> Result<Self> {
        check_labels(&labels, cells.nrows(), cells.ncols())?;
        let m = labels.len();
        for ((i, j), cell) in cells.indexed_iter() {
            cell.check_finite_nonnegative().map_err(|msg| {
                TopolowError::Invalid(format!("cell ({}, {}): {msg}", labels[i], labels[j]))
            })?;
            if i == j {
                match cell {
                    ObservationCell::Missing | ObservationCell::Exact(_) => {}
                    _ => {
                        return Err(TopolowError::Invalid(format!(
                            "diagonal cell ({}, {}) is censored; self-dissimilarity must be 0",
                            labels[i], labels[j]
                        )))
                    }
                }
                if let ObservationCell::Exact(v) = cell {
                    if *v != 0.0 {
                        return Err(TopolowError::Invalid(format!(
                            "diagonal cell ({}, {}) is {v}; self-dissimilarity must be 0",
                            labels[i], labels[j]
                        )));
                    }
                }
            }
        }
        for i in 0..m {
            cells[(i, i)] = ObservationCell::Exact(0.0);
        }
        Ok(DissimilarityMatrix { labels, cells })
    }

    /// Builds from parts without validation. Callers must uphold the type's
    /// invariants themselves; intended for matrices derived from an already
    /// validated one.
    pub fn from_cells_unchecked(labels: Vec<String>, cells: Array2<ObservationCell>) -> Self {
        DissimilarityMatrix { labels, cells }
    }

    /// Builds a fully observed matrix from dense exact values. The diagonal
    /// of `values` must be zero.
    pub fn from_exact_dense(labels: Vec<String>, values: &Array2<f64>) -> Result<Self> {
        let cells = values.mapv(ObservationCell::Exact);
        DissimilarityMatrix::new(labels, cells)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn cells(&self) -> &Array2<ObservationCell> {
        &self.cells
    }

    pub fn cell(&self, i: usize, j: usize) -> &ObservationCell {
        &self.cells[(i, j)]
    }

    /// Directed off-diagonal observed cell count.
    pub fn observed_count(&self) -> usize {
        self.off_diagonal().filter(|(_, _, c)| c.is_observed()).count()
    }

    /// Directed off-diagonal exact cell count.
    pub fn exact_count(&self) -> usize {
        self.off_diagonal().filter(|(_, _, c)| c.is_exact()).count()
    }

    pub fn censored_count(&self) -> usize {
        self.off_diagonal().filter(|(_, _, c)| c.is_censored()).count()
    }

    /// Iterator over off-diagonal cells as `(i, j, cell)`.
    pub fn off_diagonal(&self) -> impl Iterator<Item = (usize, usize, &ObservationCell)> {
        self.cells
            .indexed_iter()
            .filter(|((i, j), _)| i != j)
            .map(|((i, j), c)| (i, j, c))
    }

    /// Largest observed magnitude (exact value or censoring threshold) off
    /// the diagonal; the natural length scale of the data.
    pub fn max_observed(&self) -> Option<f64> {
        self.off_diagonal()
            .filter_map(|(_, _, c)| c.magnitude())
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }

    /// Median of observed exact off-diagonal values.
    pub fn median_exact(&self) -> Option<f64> {
        let mut vals: Vec<f64> = self
            .off_diagonal()
            .filter_map(|(_, _, c)| match c {
                ObservationCell::Exact(v) => Some(*v),
                _ => None,
            })
            .collect();
        if vals.is_empty() {
            return None;
        }
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = vals.len();
        Some(if n % 2 == 1 {
            vals[n / 2]
        } else {
            0.5 * (vals[n / 2 - 1] + vals[n / 2])
        })
    }

    /// Unordered pairs `(i, j)` with `i < j` observed in at least one
    /// direction.
    pub fn observed_pairs(&self) -> Vec<(usize, usize)> {
        let m = self.len();
        let mut out = Vec::new();
        for i in 0..m {
            for j in (i + 1)..m {
                if self.cells[(i, j)].is_observed() || self.cells[(j, i)].is_observed() {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Collapses the two directed cells of an unordered pair into the single
    /// observation driving that pair's spring.
    ///
    /// Matching kinds average their values. An exact measurement dominates a
    /// censored one. Opposite censoring directions bracket the value, so
    /// their midpoint is used as an exact stand-in.
    pub fn pair_cell(&self, a: usize, b: usize) -> ObservationCell {
        use ObservationCell::*;
        match (self.cells[(a, b)], self.cells[(b, a)]) {
            (Missing, Missing) => Missing,
            (c, Missing) | (Missing, c) => c,
            (Exact(x), Exact(y)) => Exact(0.5 * (x + y)),
            (LeftCensored(x), LeftCensored(y)) => LeftCensored(0.5 * (x + y)),
            (RightCensored(x), RightCensored(y)) => RightCensored(0.5 * (x + y)),
            (Exact(x), _) => Exact(x),
            (_, Exact(y)) => Exact(y),
            (LeftCensored(l), RightCensored(r)) | (RightCensored(r), LeftCensored(l)) => {
                Exact(0.5 * (l + r))
            }
        }
    }

    /// Copy with both directions of each listed unordered pair set missing.
    pub fn with_pairs_masked(&self, pairs: &[(usize, usize)]) -> DissimilarityMatrix {
        let mut cells = self.cells.clone();
        for &(i, j) in pairs {
            cells[(i, j)] = ObservationCell::Missing;
            cells[(j, i)] = ObservationCell::Missing;
        }
        DissimilarityMatrix {
            labels: self.labels.clone(),
            cells,
        }
    }

    /// Structural validation. Never mutates; negative values are the only
    /// hard failure. Triangle violations are counted exhaustively up to
    /// m = 200 and on a fixed sample of one million triples beyond that.
    pub fn validate(&self) -> ValidationReport {
        let m = self.len();
        let mut observed = 0usize;
        let mut exact = 0usize;
        let mut censored = 0usize;
        let mut negative = 0usize;
        for (_, _, c) in self.off_diagonal() {
            if c.is_observed() {
                observed += 1;
            }
            if c.is_exact() {
                exact += 1;
            }
            if c.is_censored() {
                censored += 1;
            }
            if c.magnitude().is_some_and(|v| v < 0.0) {
                negative += 1;
            }
        }

        let mut asymmetric = 0usize;
        for i in 0..m {
            for j in (i + 1)..m {
                let a = &self.cells[(i, j)];
                let b = &self.cells[(j, i)];
                if a.is_observed() && b.is_observed() && a != b {
                    asymmetric += 1;
                }
            }
        }

        // Sides enter the triangle check via the mean of whichever exact
        // directions were observed.
        let side = |i: usize, j: usize| -> Option<f64> {
            let fwd = match self.cells[(i, j)] {
                ObservationCell::Exact(v) => Some(v),
                _ => None,
            };
            let rev = match self.cells[(j, i)] {
                ObservationCell::Exact(v) => Some(v),
                _ => None,
            };
            match (fwd, rev) {
                (Some(a), Some(b)) => Some(0.5 * (a + b)),
                (Some(a), None) | (None, Some(a)) => Some(a),
                (None, None) => None,
            }
        };
        let violates = |i: usize, j: usize, k: usize| -> Option<bool> {
            let ab = side(i, j)?;
            let ac = side(i, k)?;
            let bc = side(j, k)?;
            Some(ab > ac + bc || ac > ab + bc || bc > ab + ac)
        };

        let mut triangles_checked = 0usize;
        let mut triangle_violations = 0usize;
        if m <= 200 {
            for i in 0..m {
                for j in (i + 1)..m {
                    for k in (j + 1)..m {
                        if let Some(v) = violates(i, j, k) {
                            triangles_checked += 1;
                            if v {
                                triangle_violations += 1;
                            }
                        }
                    }
                }
            }
        } else {
            // Fixed-seed sample keeps validate deterministic.
            use rand::Rng;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x7461_6c6c_7931);
            for _ in 0..1_000_000 {
                let i = rng.random_range(0..m);
                let j = rng.random_range(0..m);
                let k = rng.random_range(0..m);
                if i == j || j == k || i == k {
                    continue;
                }
                if let Some(v) = violates(i, j, k) {
                    triangles_checked += 1;
                    if v {
                        triangle_violations += 1;
                    }
                }
            }
        }

        let components = count_components(
            m,
            self.observed_pairs().iter().copied(),
        );

        ValidationReport {
            objects: m,
            observed_cells: observed,
            exact_cells: exact,
            censored_cells: censored,
            negative_values: negative,
            asymmetric_pairs: asymmetric,
            triangle_violations,
            triangles_checked,
            components,
        }
    }

    /// Mean observed magnitude over all off-diagonal cells touching `a`
    /// (row and column); `None` when the object has no observations.
    fn mean_observed_for(&self, a: usize) -> Option<f64> {
        let m = self.len();
        let mut sum = 0.0;
        let mut n = 0usize;
        for j in 0..m {
            if j == a {
                continue;
            }
            for c in [&self.cells[(a, j)], &self.cells[(j, a)]] {
                if let Some(v) = c.magnitude() {
                    sum += v;
                    n += 1;
                }
            }
        }
        (n > 0).then(|| sum / n as f64)
    }

    /// Orders objects so the most dissimilar-on-average land near opposite
    /// ends: objects are ranked by descending mean observed dissimilarity
    /// (ties by label, objects with no observations last) and ranks are dealt
    /// alternately to the front and back of the ordering.
    ///
    /// Returns a permutation `order` with `order[position] = object index`.
    pub fn spectral_order(&self) -> Vec<usize> {
        let m = self.len();
        let mut idx: Vec<usize> = (0..m).collect();
        idx.sort_by(|&a, &b| {
            let ma = self.mean_observed_for(a);
            let mb = self.mean_observed_for(b);
            match (ma, mb) {
                (Some(x), Some(y)) => y
                    .partial_cmp(&x)
                    .unwrap()
                    .then_with(|| self.labels[a].cmp(&self.labels[b])),
                (Some(_), None) => std::cmp::Ordering::Less,
                (None, Some(_)) => std::cmp::Ordering::Greater,
                (None, None) => self.labels[a].cmp(&self.labels[b]),
            }
        });
        let mut order = vec![0usize; m];
        for (rank, &obj) in idx.iter().enumerate() {
            let pos = if rank % 2 == 0 {
                rank / 2
            } else {
                m - 1 - rank / 2
            };
            order[pos] = obj;
        }
        order
    }
}

/// Positional labels `obj_1 .. obj_m`.
pub fn auto_labels(m: usize) -> Vec<String> {
    (1..=m).map(|i| format!("obj_{i}")).collect()
}

fn check_labels(labels: &[String], rows: usize, cols: usize) -> Result<()> {
    let m = labels.len();
    if m < 2 {
        return Err(TopolowError::Invalid(format!(
            "need at least 2 objects, got {m}"
        )));
    }
    if rows != m || cols != m {
        return Err(TopolowError::Invalid(format!(
            "matrix is {rows}x{cols} but there are {m} labels"
        )));
    }
    let mut seen = std::collections::HashSet::new();
    for l in labels {
        if !seen.insert(l) {
            return Err(TopolowError::Invalid(format!("duplicate label {l:?}")));
        }
    }
    Ok(())
}

/// Connected components of an undirected graph on `m` nodes.
pub(crate) fn count_components(m: usize, edges: impl Iterator<Item = (usize, usize)>) -> usize {
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = m;
    for (a, b) in edges {
        let ra = find(&mut parent, a);
        let rb = find(&mut parent, b);
        if ra != rb {
            parent[ra] = rb;
            components -= 1;
        }
    }
    components
}
