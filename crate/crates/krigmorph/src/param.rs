//! Morphing-node selection and the interpolation machinery built on it:
//! greedy maximum-variance selection over surface candidates, posterior
//! variance evaluation, weight-matrix assembly, and displacement fitting.
//!
//! Selection is the incremental (pivoted-Cholesky) form of the greedy loop:
//! each accepted pivot `j` with residual variance `r_j` contributes a factor
//! column `l_i = (cov(s_i, s_j) - sum_s rows[i,s] rows[j,s]) / sqrt(r_j)` and
//! the residuals drop by `l_i^2`. This is algebraically identical to
//! re-evaluating the posterior variance of every candidate each round, but
//! costs `O(n m)` time per step and `O(n m)` memory overall; no `n x n`
//! buffer is ever formed.

use crate::error::{Error, Result};
use crate::geom::Point3;
use crate::kernel::KernelSpec;
use crate::spd::CholeskyFactor;
use ndarray::{s, Array2, ArrayView2};
use std::collections::HashSet;

/// Residual variances at or below this floor are treated as numerically
/// zero: such candidates are never selected and selection stops when no
/// candidate exceeds it.
pub const ZERO_VARIANCE_FLOOR: f64 = 1e-12;

/// Residuals may round slightly negative; anything in `[-1e-10, 0)` clamps
/// to zero, anything lower indicates a broken (non-PSD) kernel.
const RESIDUAL_UNDERFLOW: f64 = -1e-10;

/// When to stop adding morphing nodes. At least one criterion must be set;
/// either may be omitted.
#[derive(Debug, Clone, Copy, Default)]
pub struct StopRule {
    /// Stop once this many nodes are selected.
    pub max_nodes: Option<usize>,
    /// Stop once the largest remaining residual variance falls below this.
    pub variance_tol: Option<f64>,
}

impl StopRule {
    pub fn max_nodes(n: usize) -> Self {
        StopRule {
            max_nodes: Some(n),
            variance_tol: None,
        }
    }

    pub fn variance_tol(tol: f64) -> Self {
        StopRule {
            max_nodes: None,
            variance_tol: Some(tol),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_nodes.is_none() && self.variance_tol.is_none() {
            return Err(Error::InvalidStopRule(
                "at least one of max_nodes / variance_tol is required",
            ));
        }
        if self.max_nodes == Some(0) {
            return Err(Error::InvalidStopRule("max_nodes must be positive"));
        }
        if let Some(tol) = self.variance_tol {
            if !(tol.is_finite() && tol >= 0.0) {
                return Err(Error::InvalidStopRule(
                    "variance_tol must be finite and nonnegative",
                ));
            }
        }
        Ok(())
    }
}

/// One accepted pivot: the candidate's index in the *original* input list
/// and its residual variance at the moment of selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep {
    pub index: usize,
    pub variance: f64,
}

/// State of a finished greedy selection over a candidate set.
///
/// Candidates are the input surface points with exact-coordinate duplicates
/// collapsed (duplicates would make `K(M,M)` singular); `source_indices`
/// maps each kept candidate back to its position in the original list.
#[derive(Debug, Clone)]
pub struct SelectionState {
    candidates: Vec<Point3>,
    source_indices: Vec<usize>,
    residual_variance: Vec<f64>,
    selected: Vec<usize>,
    trace: Vec<TraceStep>,
    chol: Option<CholeskyFactor>,
    kernel: KernelSpec,
}

impl SelectionState {
    /// Deduplicated candidate points, in input order.
    pub fn candidates(&self) -> &[Point3] {
        &self.candidates
    }

    /// Original-list index of each kept candidate.
    pub fn source_indices(&self) -> &[usize] {
        &self.source_indices
    }

    /// Residual posterior variance per kept candidate, given the selected
    /// nodes. Zero for every selected candidate.
    pub fn residual_variance(&self) -> &[f64] {
        &self.residual_variance
    }

    /// Selected candidate positions (into `candidates`), in selection order.
    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    /// Per-step selection trace with original-list indices.
    pub fn trace(&self) -> &[TraceStep] {
        &self.trace
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// Selected node coordinates, in selection order.
    pub fn nodes(&self) -> Vec<Point3> {
        self.selected.iter().map(|&i| self.candidates[i]).collect()
    }

    /// Largest residual variance over the remaining candidates.
    pub fn max_residual_variance(&self) -> f64 {
        self.residual_variance.iter().fold(0.0f64, |a, &b| a.max(b))
    }

    fn chol(&self) -> Result<&CholeskyFactor> {
        self.chol.as_ref().ok_or(Error::NoSelectableCandidate)
    }
}

/// Greedily select morphing nodes from `candidates` by maximum posterior
/// variance, until `stop` triggers or no candidate stays above the
/// numerical floor. Ties at the argmax go to the lowest candidate index.
///
/// Returns the final state together with the selected node coordinates.
pub fn select_nodes(
    kernel: &KernelSpec,
    candidates: &[Point3],
    stop: StopRule,
) -> Result<(SelectionState, Vec<Point3>)> {
    stop.validate()?;
    if candidates.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    for (i, p) in candidates.iter().enumerate() {
        if !p.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "candidate {i} has non-finite coordinates"
            )));
        }
    }

    // Collapse exact-coordinate duplicates, keeping first occurrences.
    let mut seen = HashSet::with_capacity(candidates.len());
    let mut kept = Vec::with_capacity(candidates.len());
    let mut source_indices = Vec::with_capacity(candidates.len());
    for (i, p) in candidates.iter().enumerate() {
        if seen.insert(p.dedup_key()) {
            kept.push(*p);
            source_indices.push(i);
        }
    }
    drop(seen);
    let n = kept.len();

    let mut residual: Vec<f64> = kept.iter().map(|p| kernel.prior_variance(p)).collect();
    if residual.iter().all(|&r| r <= ZERO_VARIANCE_FLOOR) {
        return Err(Error::NoSelectableCandidate);
    }

    let mut factor_cols: Vec<Vec<f64>> = Vec::new();
    let mut selected: Vec<usize> = Vec::new();
    let mut trace: Vec<TraceStep> = Vec::new();
    let mut chol: Option<CholeskyFactor> = None;
    let mut acc = vec![0.0f64; n];

    loop {
        if let Some(max) = stop.max_nodes {
            if selected.len() >= max {
                break;
            }
        }
        let (j, r_j) = argmax(&residual);
        if let Some(tol) = stop.variance_tol {
            if r_j < tol {
                break;
            }
        }
        if r_j <= ZERO_VARIANCE_FLOOR {
            break;
        }

        // Cross-covariances of every candidate against the pivot.
        let pivot = kept[j];
        let mut col: Vec<f64> = Vec::with_capacity(n);
        col.extend(kept.iter().map(|p| kernel.cov(p, &pivot)));

        // Grow the K(M,M) factor before `col` is overwritten in place.
        let cross: Vec<f64> = selected.iter().map(|&s| col[s]).collect();
        let diag = col[j];
        chol = Some(match chol {
            None => CholeskyFactor::factorize(
                ArrayView2::from_shape((1, 1), std::slice::from_ref(&diag)).expect("1x1 view"),
            )?,
            Some(f) => f.extend(&cross, diag)?,
        });

        // New factor column and residual downdate.
        acc.fill(0.0);
        for prev in &factor_cols {
            let pj = prev[j];
            for (a, p) in acc.iter_mut().zip(prev.iter()) {
                *a += p * pj;
            }
        }
        let inv_sqrt = 1.0 / r_j.sqrt();
        for i in 0..n {
            let l = (col[i] - acc[i]) * inv_sqrt;
            col[i] = l;
            let r = residual[i] - l * l;
            residual[i] = if r >= 0.0 {
                r
            } else if r >= RESIDUAL_UNDERFLOW {
                0.0
            } else {
                return Err(Error::Internal(format!(
                    "residual variance {r:e} at candidate {i} fell below {RESIDUAL_UNDERFLOW:e}; \
                     covariance matrix is not positive semi-definite"
                )));
            };
        }
        residual[j] = 0.0;

        trace.push(TraceStep {
            index: source_indices[j],
            variance: r_j,
        });
        selected.push(j);
        factor_cols.push(col);
    }

    drop(factor_cols);
    let state = SelectionState {
        candidates: kept,
        source_indices,
        residual_variance: residual,
        selected,
        trace,
        chol,
        kernel: kernel.clone(),
    };
    let nodes = state.nodes();
    Ok((state, nodes))
}

/// First maximal element: strict comparison keeps the lowest index on ties.
fn argmax(values: &[f64]) -> (usize, f64) {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, &v) in values.iter().enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    (best, best_v)
}

/// Posterior variance `cov(x,x) - K(x,M) K(M,M)^{-1} K(M,x)` at each point,
/// clamped to `[0, cov(x,x)]`. An empty node list yields the prior variance.
pub fn posterior_variance(
    kernel: &KernelSpec,
    nodes: &[Point3],
    points: &[Point3],
) -> Result<Vec<f64>> {
    if nodes.is_empty() {
        return Ok(points.iter().map(|x| kernel.prior_variance(x)).collect());
    }
    let kmm = kernel.cov_matrix(nodes, nodes)?;
    let chol = CholeskyFactor::factorize(kmm.view())?;
    posterior_variance_with(kernel, nodes, &chol, points)
}

/// [`posterior_variance`] against a pre-factorized `K(M,M)`.
pub fn posterior_variance_with(
    kernel: &KernelSpec,
    nodes: &[Point3],
    chol: &CholeskyFactor,
    points: &[Point3],
) -> Result<Vec<f64>> {
    let mut k = vec![0.0f64; nodes.len()];
    points
        .iter()
        .map(|x| {
            for (ki, m) in k.iter_mut().zip(nodes.iter()) {
                *ki = kernel.cov(m, x);
            }
            let w = chol.forward(&k)?;
            let prior = kernel.prior_variance(x);
            let v = prior - w.iter().map(|v| v * v).sum::<f64>();
            Ok(v.clamp(0.0, prior))
        })
        .collect()
}

/// Assemble the weight matrix `W = K(M,M)^{-1} K(M,P)` of shape
/// `(|M|, |P|)`, processing `P` in column blocks of at most `chunk` points
/// so the transient footprint stays at `O(|M| * chunk)` beyond the output.
pub fn build_weights(
    kernel: &KernelSpec,
    nodes: &[Point3],
    points: &[Point3],
    chunk: usize,
) -> Result<Array2<f64>> {
    let kmm = kernel.cov_matrix(nodes, nodes)?;
    let chol = CholeskyFactor::factorize(kmm.view())?;
    build_weights_with(kernel, nodes, &chol, points, chunk)
}

/// [`build_weights`] against a pre-factorized `K(M,M)`.
pub fn build_weights_with(
    kernel: &KernelSpec,
    nodes: &[Point3],
    chol: &CholeskyFactor,
    points: &[Point3],
    chunk: usize,
) -> Result<Array2<f64>> {
    if chunk == 0 {
        return Err(Error::InvalidArgument("chunk must be positive".to_string()));
    }
    if nodes.is_empty() || points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let m = nodes.len();
    let mut w = Array2::zeros((m, points.len()));
    for (start, block) in points
        .chunks(chunk)
        .enumerate()
        .map(|(b, c)| (b * chunk, c))
    {
        let kmp = kernel.cov_matrix(nodes, block)?;
        let x = chol.solve(kmp.view())?;
        w.slice_mut(s![.., start..start + block.len()]).assign(&x);
    }
    Ok(w)
}

/// Node displacements, one `[dx, dy, dz]` row per morphing node. These are
/// the design variables handed to the morph.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementVector {
    d: Array2<f64>,
}

impl DisplacementVector {
    /// `d` must have three columns and finite entries.
    pub fn new(d: Array2<f64>) -> Result<Self> {
        if d.ncols() != 3 {
            return Err(Error::DimensionMismatch {
                context: "displacement columns",
                expected: 3,
                got: d.ncols(),
            });
        }
        if d.nrows() == 0 {
            return Err(Error::EmptyPointSet);
        }
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "displacements must be finite".to_string(),
            ));
        }
        Ok(DisplacementVector { d })
    }

    pub fn from_rows(rows: &[[f64; 3]]) -> Result<Self> {
        let mut d = Array2::zeros((rows.len(), 3));
        for (i, r) in rows.iter().enumerate() {
            for c in 0..3 {
                d[(i, c)] = r[c];
            }
        }
        DisplacementVector::new(d)
    }

    pub fn node_count(&self) -> usize {
        self.d.nrows()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.d
    }
}

/// Solve the inverse problem: find node displacements whose interpolant
/// matches prescribed displacements at the target points, in the
/// least-squares sense. With targets exactly at the nodes this reproduces
/// them (the system matrix is the identity).
pub fn fit_displacements(
    kernel: &KernelSpec,
    nodes: &[Point3],
    targets: &[(Point3, Point3)],
) -> Result<DisplacementVector> {
    if targets.is_empty() || nodes.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let mut seen = HashSet::with_capacity(targets.len());
    for (p, _) in targets {
        if !seen.insert(p.dedup_key()) {
            return Err(Error::InvalidArgument(format!(
                "duplicate target point [{}, {}, {}]",
                p.x(),
                p.y(),
                p.z()
            )));
        }
    }
    let q: Vec<Point3> = targets.iter().map(|(p, _)| *p).collect();
    let mut t = Array2::zeros((q.len(), 3));
    for (i, (_, v)) in targets.iter().enumerate() {
        for c in 0..3 {
            t[(i, c)] = v.0[c];
        }
    }

    let kmm = kernel.cov_matrix(nodes, nodes)?;
    let chol = CholeskyFactor::factorize(kmm.view())?;
    let a = chol.solve(kernel.cov_matrix(nodes, &q)?.view())?; // m x q

    // Normal equations per coordinate: (A A^T) d = A t.
    let normal = a.dot(&a.t());
    let rhs = a.dot(&t);
    let nf = CholeskyFactor::factorize(normal.view()).map_err(|_| Error::DegenerateFit)?;
    let d = nf.solve(rhs.view())?;
    DisplacementVector::new(d)
}

/// A finished parametrization: the selected nodes, the factorized
/// `K(M,M)`, and one precomputed weight block per mesh. Immutable once the
/// weight blocks are in place; freely shareable across threads.
#[derive(Debug, Clone)]
pub struct Parametrization {
    kernel: KernelSpec,
    nodes: Vec<Point3>,
    node_source_indices: Vec<usize>,
    chol: CholeskyFactor,
    selection_trace: Vec<TraceStep>,
    meshes: Vec<MeshWeights>,
}

/// Weight block `W = K(M,M)^{-1} K(M,P)` for one mesh, keyed by its id.
#[derive(Debug, Clone)]
pub struct MeshWeights {
    id: String,
    weights: Array2<f64>,
}

impl MeshWeights {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn point_count(&self) -> usize {
        self.weights.ncols()
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    /// Size of the raw weight payload in bytes (eight per entry).
    pub fn payload_bytes(&self) -> usize {
        self.weights.len() * std::mem::size_of::<f64>()
    }
}

impl Parametrization {
    /// Build from a finished selection. Fails if the selection is empty
    /// (e.g. the variance tolerance exceeded every candidate's prior).
    pub fn from_selection(state: SelectionState) -> Result<Self> {
        if state.selected.is_empty() {
            return Err(Error::NoSelectableCandidate);
        }
        let nodes = state.nodes();
        let chol = state.chol()?.clone();
        Ok(Parametrization {
            kernel: state.kernel,
            node_source_indices: state
                .selected
                .iter()
                .map(|&i| state.source_indices[i])
                .collect(),
            nodes,
            chol,
            selection_trace: state.trace,
            meshes: Vec::new(),
        })
    }

    /// Reassemble from persisted parts; refactorizes `K(M,M)`.
    pub(crate) fn from_parts(
        kernel: KernelSpec,
        nodes: Vec<Point3>,
        selection_trace: Vec<TraceStep>,
        meshes: Vec<(String, Array2<f64>)>,
    ) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        for p in &nodes {
            if !p.is_finite() {
                return Err(Error::InvalidArgument(
                    "node coordinates must be finite".to_string(),
                ));
            }
        }
        let kmm = kernel.cov_matrix(&nodes, &nodes)?;
        let chol = CholeskyFactor::factorize(kmm.view())?;
        let mut param = Parametrization {
            kernel,
            node_source_indices: selection_trace.iter().map(|t| t.index).collect(),
            nodes,
            chol,
            selection_trace,
            meshes: Vec::new(),
        };
        for (id, weights) in meshes {
            param.insert_weights(MeshWeights { id, weights })?;
        }
        Ok(param)
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn nodes(&self) -> &[Point3] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Original surface-candidate index of each node.
    pub fn node_source_indices(&self) -> &[usize] {
        &self.node_source_indices
    }

    pub fn selection_trace(&self) -> &[TraceStep] {
        &self.selection_trace
    }

    pub fn chol(&self) -> &CholeskyFactor {
        &self.chol
    }

    pub fn meshes(&self) -> &[MeshWeights] {
        &self.meshes
    }

    pub fn mesh(&self, id: &str) -> Option<&MeshWeights> {
        self.meshes.iter().find(|m| m.id == id)
    }

    /// Precompute and store the weight block for a mesh's point set.
    pub fn add_mesh(&mut self, id: &str, points: &[Point3], chunk: usize) -> Result<()> {
        let weights = build_weights_with(&self.kernel, &self.nodes, &self.chol, points, chunk)?;
        self.insert_weights(MeshWeights {
            id: id.to_string(),
            weights,
        })
    }

    fn insert_weights(&mut self, block: MeshWeights) -> Result<()> {
        if block.weights.nrows() != self.nodes.len() {
            return Err(Error::DimensionMismatch {
                context: "weight block rows",
                expected: self.nodes.len(),
                got: block.weights.nrows(),
            });
        }
        if self.meshes.iter().any(|m| m.id == block.id) {
            return Err(Error::InvalidArgument(format!(
                "duplicate mesh id '{}'",
                block.id
            )));
        }
        self.meshes.push(block);
        Ok(())
    }

    /// Posterior variance at arbitrary points, using the stored factor.
    pub fn variance_at(&self, points: &[Point3]) -> Result<Vec<f64>> {
        posterior_variance_with(&self.kernel, &self.nodes, &self.chol, points)
    }

    /// Displacements of every point of the identified mesh: the
    /// `(|P|, 3)` product `W^T d`.
    pub fn displace(&self, id: &str, d: &DisplacementVector) -> Result<Array2<f64>> {
        let block = self.mesh(id).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "unknown mesh id '{}' (available: {})",
                id,
                self.meshes
                    .iter()
                    .map(|m| m.id.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            ))
        })?;
        if d.node_count() != self.nodes.len() {
            return Err(Error::DimensionMismatch {
                context: "displacement rows",
                expected: self.nodes.len(),
                got: d.node_count(),
            });
        }
        Ok(block.weights.t().dot(d.as_array()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed::{FixedGeometry, Primitive};
    use crate::kernel::KernelFamily;
    use approx::assert_abs_diff_eq;

    fn gaussian(theta: f64) -> KernelSpec {
        KernelSpec::new(KernelFamily::Gaussian, theta, None).unwrap()
    }

    fn pts(coords: &[[f64; 3]]) -> Vec<Point3> {
        coords.iter().map(|&c| Point3(c)).collect()
    }

    #[test]
    fn single_candidate_selects_itself() {
        let k = gaussian(1.0);
        let s = pts(&[[0.0, 0.0, 0.0]]);
        let (state, nodes) = select_nodes(&k, &s, StopRule::max_nodes(1)).unwrap();
        assert_eq!(nodes, s);
        assert_eq!(
            state.trace(),
            &[TraceStep {
                index: 0,
                variance: 1.0
            }]
        );
        assert_eq!(state.residual_variance()[0], 0.0);
    }

    #[test]
    fn collinear_example_selects_endpoints() {
        let k = gaussian(1.0);
        let s = pts(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]);
        let (state, nodes) = select_nodes(&k, &s, StopRule::max_nodes(2)).unwrap();
        // all priors tie at 1; lowest index wins, then the far end
        assert_eq!(state.trace()[0].index, 0);
        assert_eq!(state.trace()[0].variance, 1.0);
        assert_eq!(state.trace()[1].index, 2);
        assert_abs_diff_eq!(
            state.trace()[1].variance,
            0.9816843611112658,
            epsilon = 1e-12
        );
        assert_eq!(nodes[0], s[0]);
        assert_eq!(nodes[1], s[2]);
        // middle point's residual after both picks stays in [0, 1]
        let r = state.residual_variance()[1];
        assert!(r > 0.0 && r < 0.6321205588285578);
    }

    #[test]
    fn variance_tolerance_stops_after_one_node() {
        let k = gaussian(1.0);
        let s = pts(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]);
        let (state, nodes) = select_nodes(&k, &s, StopRule::variance_tol(0.99)).unwrap();
        assert_eq!(nodes.len(), 1);
        assert_abs_diff_eq!(
            state.max_residual_variance(),
            0.9816843611112658,
            epsilon = 1e-12
        );
    }

    #[test]
    fn stop_rule_validation() {
        let k = gaussian(1.0);
        let s = pts(&[[0.0; 3]]);
        assert!(matches!(
            select_nodes(&k, &s, StopRule::default()),
            Err(Error::InvalidStopRule(_))
        ));
        assert!(matches!(
            select_nodes(&k, &s, StopRule::max_nodes(0)),
            Err(Error::InvalidStopRule(_))
        ));
        assert!(matches!(
            select_nodes(&k, &s, StopRule::variance_tol(-0.5)),
            Err(Error::InvalidStopRule(_))
        ));
        assert!(matches!(
            select_nodes(&k, &[], StopRule::max_nodes(1)),
            Err(Error::EmptyPointSet)
        ));
    }

    #[test]
    fn duplicates_collapse_before_selection() {
        let k = gaussian(1.0);
        let s = pts(&[
            [0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
        ]);
        let (state, nodes) = select_nodes(&k, &s, StopRule::max_nodes(10)).unwrap();
        assert_eq!(nodes.len(), 2);
        // reported indices refer to the original list (first occurrences)
        let indices: Vec<usize> = state.trace().iter().map(|t| t.index).collect();
        assert_eq!(indices, vec![0, 2]);
    }

    #[test]
    fn all_fixed_candidates_error() {
        let fixing = FixedGeometry::new(vec![Primitive::Sphere {
            center: [0.0; 3].into(),
            radius: 10.0,
        }])
        .unwrap();
        let k = KernelSpec::new(KernelFamily::Gaussian, 1.0, Some(fixing)).unwrap();
        let s = pts(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
        assert!(matches!(
            select_nodes(&k, &s, StopRule::max_nodes(1)),
            Err(Error::NoSelectableCandidate)
        ));
    }

    #[test]
    fn fixed_candidates_are_skipped() {
        let fixing = FixedGeometry::new(vec![Primitive::Sphere {
            center: [0.0; 3].into(),
            radius: 1.0,
        }])
        .unwrap();
        let k = KernelSpec::new(KernelFamily::Gaussian, 1.0, Some(fixing.clone())).unwrap();
        let s = pts(&[[0.0, 0.0, 0.0], [5.0, 0.0, 0.0], [0.5, 0.0, 0.0]]);
        let (_, nodes) = select_nodes(&k, &s, StopRule::max_nodes(5)).unwrap();
        for node in &nodes {
            assert!(fixing.distance(node) > 0.0, "selected a fixed point");
        }
        assert_eq!(nodes.len(), 1);
    }

    #[test]
    fn posterior_variance_reference_values() {
        let k = gaussian(1.0);
        let m = pts(&[[0.0, 0.0, 0.0]]);
        let x = pts(&[[1.0, 0.0, 0.0]]);
        let v = posterior_variance(&k, &m, &x).unwrap();
        assert_abs_diff_eq!(v[0], 0.6321205588285577, epsilon = 1e-14);

        // at the nodes themselves: zero
        let nodes = pts(&[[0.0, 0.0, 0.0], [1.5, 0.2, -0.3], [-2.0, 1.0, 0.4]]);
        let v = posterior_variance(&k, &nodes, &nodes).unwrap();
        for vi in v {
            assert!(vi <= 1e-10, "variance at node = {vi}");
        }

        // empty node list gives the prior
        let v = posterior_variance(&k, &[], &x).unwrap();
        assert_eq!(v, vec![1.0]);
    }

    #[test]
    fn posterior_variance_zero_inside_fixed_region() {
        let fixing = FixedGeometry::new(vec![Primitive::Sphere {
            center: [0.0; 3].into(),
            radius: 1.0,
        }])
        .unwrap();
        let k = KernelSpec::new(KernelFamily::Gaussian, 1.0, Some(fixing)).unwrap();
        let m = pts(&[[3.0, 0.0, 0.0]]);
        let v = posterior_variance(&k, &m, &pts(&[[0.0, 0.0, 0.0]])).unwrap();
        assert_eq!(v[0], 0.0);
    }

    #[test]
    fn weights_identity_at_nodes() {
        let k = gaussian(1.0);
        let m = pts(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.2, 0.0]]);
        let w = build_weights(&k, &m, &m, 2).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(w[(i, j)], expect, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn weights_scalar_case() {
        let k = gaussian(1.0);
        let m = pts(&[[0.0, 0.0, 0.0]]);
        let p = pts(&[[1.0, 0.0, 0.0]]);
        let w = build_weights(&k, &m, &p, 8).unwrap();
        assert_abs_diff_eq!(w[(0, 0)], 0.6065306597126334, epsilon = 1e-15);
    }

    #[test]
    fn chunking_is_self_consistent() {
        let k = gaussian(0.8);
        let m = pts(&[[0.0, 0.0, 0.0], [1.0, 0.3, 0.0], [0.2, 1.4, 0.5]]);
        let p: Vec<Point3> = (0..37)
            .map(|i| Point3::new(i as f64 * 0.21, (i % 5) as f64 * 0.4, (i % 3) as f64 * 0.7))
            .collect();
        let w1 = build_weights(&k, &m, &p, 1).unwrap();
        let wp = build_weights(&k, &m, &p, p.len()).unwrap();
        let num = (&w1 - &wp)
            .mapv(f64::abs)
            .iter()
            .fold(0.0f64, |a, &b| a.max(b));
        let den = wp.mapv(f64::abs).iter().fold(0.0f64, |a, &b| a.max(b));
        assert!(num <= 1e-12 * den.max(1.0), "chunk mismatch {num}");
        assert!(matches!(
            build_weights(&k, &m, &p, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn fit_reproduces_targets_at_nodes() {
        let k = gaussian(1.0);
        let m = pts(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.5, 0.2]]);
        let targets: Vec<(Point3, Point3)> = m
            .iter()
            .enumerate()
            .map(|(i, p)| (*p, Point3::new(i as f64, -1.0, 0.5 * i as f64)))
            .collect();
        let d = fit_displacements(&k, &m, &targets).unwrap();
        for (i, (_, v)) in targets.iter().enumerate() {
            for c in 0..3 {
                assert_abs_diff_eq!(d.as_array()[(i, c)], v.0[c], epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn fit_single_node_off_node_target() {
        let k = gaussian(1.0);
        let m = pts(&[[0.0, 0.0, 0.0]]);
        let e = (-0.5f64).exp();
        let targets = vec![(Point3::new(1.0, 0.0, 0.0), Point3::new(e, 0.0, 0.0))];
        let d = fit_displacements(&k, &m, &targets).unwrap();
        assert_abs_diff_eq!(d.as_array()[(0, 0)], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(d.as_array()[(0, 1)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn fit_rejects_duplicates_and_degenerate_targets() {
        let k = gaussian(1.0);
        let m = pts(&[[0.0, 0.0, 0.0]]);
        let dup = vec![
            (Point3::new(1.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0)),
            (Point3::new(1.0, 0.0, 0.0), Point3::new(2.0, 0.0, 0.0)),
        ];
        assert!(matches!(
            fit_displacements(&k, &m, &dup),
            Err(Error::InvalidArgument(_))
        ));

        // a target so remote that all covariances underflow to zero
        let far = vec![(Point3::new(1e6, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0))];
        assert!(matches!(
            fit_displacements(&k, &m, &far),
            Err(Error::DegenerateFit)
        ));
    }

    #[test]
    fn parametrization_pipeline_and_displace() {
        let k = gaussian(1.0);
        let s = pts(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]);
        let (state, _) = select_nodes(&k, &s, StopRule::max_nodes(2)).unwrap();
        let mut param = Parametrization::from_selection(state).unwrap();
        param.add_mesh("surf", &s, 2).unwrap();
        assert!(param.mesh("surf").is_some());
        assert_eq!(param.mesh("surf").unwrap().point_count(), 3);
        assert!(matches!(
            param.add_mesh("surf", &s, 2),
            Err(Error::InvalidArgument(_))
        ));

        // unit-x displacement at both nodes moves the node points by unit x
        let d = DisplacementVector::from_rows(&[[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]).unwrap();
        let moved = param.displace("surf", &d).unwrap();
        assert_abs_diff_eq!(moved[(0, 0)], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(moved[(2, 0)], 1.0, epsilon = 1e-8);
        assert!(matches!(
            param.displace("nope", &d),
            Err(Error::InvalidArgument(_))
        ));
        let bad = DisplacementVector::from_rows(&[[1.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(
            param.displace("surf", &bad),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn displacement_vector_validation() {
        assert!(DisplacementVector::new(Array2::zeros((0, 3))).is_err());
        assert!(DisplacementVector::new(Array2::zeros((2, 2))).is_err());
        let mut d = Array2::zeros((1, 3));
        d[(0, 1)] = f64::NAN;
        assert!(DisplacementVector::new(d).is_err());
    }
}
