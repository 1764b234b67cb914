//! Density operators with explicit subsystem layouts: named families, noise
//! mixtures, and triangle/NCDS network states.
//!
//! Library-wide convention: network states are stored node-major, so the
//! triangle uses the factor order `A1 A2 B1 B2 C1 C2`.

use num_complex::Complex64;

use crate::criteria::NetworkTopology;
use crate::error::{Error, Result};
use crate::tensor::{
    eigvals_hermitian, kron, kron_all, marginal, nodes_by_prefix, partial_trace, permute_subsystems,
    ComplexMatrix, Node, SubsystemLayout, ONE, ZERO,
};

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-9;
const KRAUS_TOL: f64 = 1e-9;
const UNITARY_TOL: f64 = 1e-9;

/// Hermitian, positive semidefinite, trace-one operator on a labeled tensor space.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
    layout: SubsystemLayout,
}

impl DensityOperator {
    pub fn new(matrix: ComplexMatrix, layout: SubsystemLayout) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() != layout.total_dim() {
            return Err(Error::Dimension(format!(
                "{}x{} matrix for layout {:?} (dim {})",
                matrix.rows(),
                matrix.cols(),
                layout.dims(),
                layout.total_dim()
            )));
        }
        if !matrix.is_finite() {
            return Err(Error::InvalidState("non-finite entries".into()));
        }
        let deviation = matrix.hermiticity_error();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        let matrix = matrix.hermitian_part();
        let tr = matrix.trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = eigvals_hermitian(&matrix)?[0];
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self { matrix, layout })
    }

    /// Projector onto the normalized `ket`.
    pub fn from_ket(ket: &[Complex64], layout: SubsystemLayout) -> Result<Self> {
        let norm = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let psi: Vec<Complex64> = ket.iter().map(|z| z / norm).collect();
        Self::new(ComplexMatrix::outer(&psi), layout)
    }

    pub fn maximally_mixed(layout: SubsystemLayout) -> Self {
        let d = layout.total_dim();
        Self {
            matrix: ComplexMatrix::identity(d).scale(1.0 / d as f64),
            layout,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn into_parts(self) -> (ComplexMatrix, SubsystemLayout) {
        (self.matrix, self.layout)
    }

    /// Nodes inferred from the factor labels (see [`nodes_by_prefix`]).
    pub fn nodes(&self) -> Vec<Node> {
        nodes_by_prefix(&self.layout)
    }

    /// `tr(op * rho)`; `op` acts on the whole space.
    pub fn expectation(&self, op: &ComplexMatrix) -> Complex64 {
        op.trace_product(&self.matrix)
    }

    /// Reduced state on `factors`, in exactly that order.
    pub fn marginal<S: AsRef<str>>(&self, factors: &[S]) -> Result<Self> {
        let (m, layout) = marginal(&self.matrix, &self.layout, factors)?;
        Ok(Self { matrix: m, layout })
    }

    /// Reduced state on `keep`, in layout order.
    pub fn partial_trace<S: AsRef<str>>(&self, keep: &[S]) -> Result<Self> {
        let (m, layout) = partial_trace(&self.matrix, &self.layout, keep)?;
        Ok(Self { matrix: m, layout })
    }

    pub fn permute<S: AsRef<str>>(&self, new_order: &[S]) -> Result<Self> {
        let (m, layout) = permute_subsystems(&self.matrix, &self.layout, new_order)?;
        Ok(Self { matrix: m, layout })
    }

    pub fn relabel<S: Into<String>>(&self, labels: Vec<S>) -> Result<Self> {
        Ok(Self {
            matrix: self.matrix.clone(),
            layout: SubsystemLayout::new(self.layout.dims().to_vec(), labels)?,
        })
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            matrix: kron(&self.matrix, &other.matrix),
            layout: self.layout.concat(&other.layout)?,
        })
    }

    /// Refines every factor of dimension `d1 * d2` into `<label>1 (d1) ⊗ <label>2 (d2)`.
    /// The matrix is unchanged; only the layout is refined.
    pub fn split_factors(&self, d1: usize, d2: usize) -> Result<Self> {
        let mut dims = Vec::new();
        let mut labels = Vec::new();
        for (label, &d) in self.layout.labels().iter().zip(self.layout.dims()) {
            if d != d1 * d2 {
                return Err(Error::Layout(format!(
                    "factor `{label}` has dimension {d}, cannot split as {d1}x{d2}"
                )));
            }
            dims.extend([d1, d2]);
            labels.push(format!("{label}1"));
            labels.push(format!("{label}2"));
        }
        Ok(Self {
            matrix: self.matrix.clone(),
            layout: SubsystemLayout::new(dims, labels)?,
        })
    }
}

/// Completely positive trace-preserving map in Kraus form.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    kraus_ops: Vec<ComplexMatrix>,
}

impl KrausChannel {
    pub fn new(kraus_ops: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus_ops
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty Kraus set".into()))?;
        let (d_out, d_in) = (first.rows(), first.cols());
        if kraus_ops.iter().any(|k| k.rows() != d_out || k.cols() != d_in) {
            return Err(Error::Dimension("Kraus operators have different shapes".into()));
        }
        let mut sum = ComplexMatrix::zeros(d_in, d_in);
        for k in &kraus_ops {
            sum = &sum + &k.adjoint().matmul(k);
        }
        let deviation = sum.max_abs_diff(&ComplexMatrix::identity(d_in));
        if deviation > KRAUS_TOL {
            return Err(Error::NotTracePreserving { deviation });
        }
        Ok(Self { kraus_ops })
    }

    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        check_unitary(&u)?;
        Self::new(vec![u])
    }

    pub fn identity(d: usize) -> Self {
        Self {
            kraus_ops: vec![ComplexMatrix::identity(d)],
        }
    }

    /// Replaces every input by `I/d`: Kraus operators `|i><j| / sqrt(d)`.
    pub fn fully_depolarizing(d: usize) -> Self {
        let s = 1.0 / (d as f64).sqrt();
        let mut ops = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let mut k = ComplexMatrix::zeros(d, d);
                k[(i, j)] = Complex64::new(s, 0.0);
                ops.push(k);
            }
        }
        Self { kraus_ops: ops }
    }

    pub fn kraus_ops(&self) -> &[ComplexMatrix] {
        &self.kraus_ops
    }

    pub fn input_dim(&self) -> usize {
        self.kraus_ops[0].cols()
    }

    pub fn output_dim(&self) -> usize {
        self.kraus_ops[0].rows()
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.output_dim(), self.output_dim());
        for k in &self.kraus_ops {
            out = &out + &rho.conjugate_by(k);
        }
        out
    }
}

fn check_unitary(u: &ComplexMatrix) -> Result<()> {
    if !u.is_square() {
        return Err(Error::NotUnitary { deviation: f64::INFINITY });
    }
    let deviation = u.adjoint().matmul(u).max_abs_diff(&ComplexMatrix::identity(u.rows()));
    if deviation > UNITARY_TOL {
        return Err(Error::NotUnitary { deviation });
    }
    Ok(())
}

fn party_labels(n: usize) -> Vec<String> {
    (0..n).map(|k| ((b'A' + k as u8) as char).to_string()).collect()
}

fn basis_index(digits: &[usize], d: usize) -> usize {
    digits.iter().fold(0, |acc, &x| acc * d + x)
}

/// Which levels enter a GHZ superposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GhzLevels {
    /// `(|i...i> + |j...j>)/sqrt(2)`
    Pair(usize, usize),
    /// `sum_k |k...k> / sqrt(d)`
    Full,
}

/// GHZ state on `parties` subsystems of dimension `local_dim`, labeled `A, B, C, ...`.
pub fn ghz_state(parties: usize, local_dim: usize, levels: GhzLevels) -> Result<DensityOperator> {
    if local_dim < 2 || !(2..=26).contains(&parties) {
        return Err(Error::InvalidArgument(format!(
            "GHZ needs 2..=26 parties and local dimension >= 2, got {parties} and {local_dim}"
        )));
    }
    let levels: Vec<usize> = match levels {
        GhzLevels::Pair(i, j) => {
            if i >= local_dim || j >= local_dim || i == j {
                return Err(Error::InvalidArgument(format!(
                    "levels ({i}, {j}) invalid for local dimension {local_dim}"
                )));
            }
            vec![i, j]
        }
        GhzLevels::Full => (0..local_dim).collect(),
    };
    let dim = local_dim.pow(parties as u32);
    let mut ket = vec![ZERO; dim];
    for &k in &levels {
        ket[basis_index(&vec![k; parties], local_dim)] = ONE;
    }
    DensityOperator::from_ket(&ket, SubsystemLayout::new(vec![local_dim; parties], party_labels(parties))?)
}

/// `(|100> + |010> + |001>)/sqrt(3)` on qubits `A, B, C`.
pub fn w_state() -> DensityOperator {
    let mut ket = vec![ZERO; 8];
    for k in [1, 2, 4] {
        ket[k] = ONE;
    }
    DensityOperator::from_ket(&ket, SubsystemLayout::new(vec![2; 3], party_labels(3)).unwrap()).unwrap()
}

/// Three-ququart Dicke state: uniform superposition of `|i1 i2 i3>` with `i1+i2+i3 = k`.
pub fn dicke_state(k: usize) -> Result<DensityOperator> {
    if !(1..=9).contains(&k) {
        return Err(Error::InvalidArgument(format!("Dicke excitation {k} outside 1..=9")));
    }
    let mut ket = vec![ZERO; 64];
    for i1 in 0..4 {
        for i2 in 0..4 {
            for i3 in 0..4 {
                if i1 + i2 + i3 == k {
                    ket[basis_index(&[i1, i2, i3], 4)] = ONE;
                }
            }
        }
    }
    DensityOperator::from_ket(&ket, SubsystemLayout::new(vec![4; 3], party_labels(3))?)
}

/// Four-qubit linear cluster state `|+0+0> + |+0-1> + |-1-0> + |-1+1>` (normalized),
/// factors labeled `1..4`.
pub fn cluster4_state() -> DensityOperator {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus = [ONE * s, ONE * s];
    let minus = [ONE * s, -ONE * s];
    let zero = [ONE, ZERO];
    let one = [ZERO, ONE];
    let terms: [[&[Complex64; 2]; 4]; 4] = [
        [&plus, &zero, &plus, &zero],
        [&plus, &zero, &minus, &one],
        [&minus, &one, &minus, &zero],
        [&minus, &one, &plus, &one],
    ];
    let mut ket = vec![ZERO; 16];
    for term in &terms {
        for (idx, amp) in ket.iter_mut().enumerate() {
            let mut a = ONE;
            for (q, factor) in term.iter().enumerate() {
                a *= factor[(idx >> (3 - q)) & 1];
            }
            *amp += a;
        }
    }
    DensityOperator::from_ket(&ket, SubsystemLayout::new(vec![2; 4], vec!["1", "2", "3", "4"]).unwrap())
        .unwrap()
}

/// Maximally entangled pair `sum_k |kk> / sqrt(d)` on factors `1, 2`.
pub fn bell_pair(local_dim: usize) -> Result<DensityOperator> {
    if local_dim < 2 {
        return Err(Error::InvalidArgument(format!("local dimension {local_dim} < 2")));
    }
    let mut ket = vec![ZERO; local_dim * local_dim];
    for k in 0..local_dim {
        ket[k * local_dim + k] = ONE;
    }
    DensityOperator::from_ket(&ket, SubsystemLayout::new(vec![local_dim; 2], vec!["1", "2"])?)
}

/// `v * rho + (1 - v) * I / dim`
pub fn mix_white_noise(rho: &DensityOperator, v: f64) -> Result<DensityOperator> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidArgument(format!("visibility {v} outside [0, 1]")));
    }
    let d = rho.dim();
    let noise = ComplexMatrix::identity(d).scale((1.0 - v) / d as f64);
    Ok(DensityOperator {
        matrix: &rho.matrix.scale(v) + &noise,
        layout: rho.layout.clone(),
    })
}

fn check_bipartite(rho: &DensityOperator, name: &str) -> Result<usize> {
    let dims = rho.layout.dims();
    if dims.len() != 2 || dims[0] != dims[1] {
        return Err(Error::Layout(format!(
            "source {name} must be bipartite d x d, has dims {dims:?}"
        )));
    }
    Ok(dims[0])
}

/// Basic triangle network state. Source `c` feeds `(A2, B1)`, `a` feeds
/// `(B2, C1)` and `b` feeds `(C2, A1)`; the result is in node-major order
/// `A1 A2 B1 B2 C1 C2`.
pub fn btn_assemble(
    rho_a: &DensityOperator,
    rho_b: &DensityOperator,
    rho_c: &DensityOperator,
) -> Result<DensityOperator> {
    let da = check_bipartite(rho_a, "a")?;
    let db = check_bipartite(rho_b, "b")?;
    let dc = check_bipartite(rho_c, "c")?;
    // source-major order C2 A1 | A2 B1 | B2 C1
    let matrix = kron_all([rho_b.matrix(), rho_c.matrix(), rho_a.matrix()]);
    let layout = SubsystemLayout::new(vec![db, db, dc, dc, da, da], vec!["C2", "A1", "A2", "B1", "B2", "C1"])?;
    let (m, l) = permute_subsystems(&matrix, &layout, &["A1", "A2", "B1", "B2", "C1", "C2"])?;
    Ok(DensityOperator { matrix: m, layout: l })
}

/// Basic network state for an arbitrary topology. `sources[s]` is a state on
/// one factor per node of `topology.sources[s]`, in that node order. Returns
/// the node-major state and its nodes; factor `<node>:<source>` holds the
/// share of `source` at `node`.
pub fn network_assemble(
    topology: &NetworkTopology,
    sources: &[DensityOperator],
) -> Result<(DensityOperator, Vec<Node>)> {
    if sources.len() != topology.sources().len() {
        return Err(Error::Topology(format!(
            "{} source states for {} sources",
            sources.len(),
            topology.sources().len()
        )));
    }
    let mut source_major = Vec::new();
    let mut dims = Vec::new();
    for (src, rho) in topology.sources().iter().zip(sources) {
        if rho.layout.len() != src.nodes.len() {
            return Err(Error::Layout(format!(
                "source `{}` spans {} nodes but its state has {} factors",
                src.name,
                src.nodes.len(),
                rho.layout.len()
            )));
        }
        for (node, &d) in src.nodes.iter().zip(rho.layout.dims()) {
            source_major.push(format!("{node}:{}", src.name));
            dims.push(d);
        }
    }
    let matrix = kron_all(sources.iter().map(|s| s.matrix()));
    let layout = SubsystemLayout::new(dims, source_major)?;
    let mut nodes = Vec::new();
    let mut order = Vec::new();
    for node in topology.nodes() {
        let factors: Vec<String> = topology
            .sources()
            .iter()
            .filter(|s| s.nodes.contains(node))
            .map(|s| format!("{node}:{}", s.name))
            .collect();
        if factors.is_empty() {
            return Err(Error::Topology(format!("node `{node}` receives no source")));
        }
        order.extend(factors.iter().cloned());
        nodes.push(Node::new(node.clone(), factors));
    }
    let (m, l) = permute_subsystems(&matrix, &layout, &order)?;
    Ok((DensityOperator { matrix: m, layout: l }, nodes))
}

fn node_span(layout: &SubsystemLayout, nodes: &[Node]) -> Result<Vec<usize>> {
    crate::tensor::check_node_major(layout, nodes)?;
    nodes.iter().map(|n| n.dim(layout)).collect()
}

fn embed_at(op: &ComplexMatrix, before: usize, after: usize) -> ComplexMatrix {
    kron_all([&ComplexMatrix::identity(before), op, &ComplexMatrix::identity(after)])
}

/// `(U_1 ⊗ ... ⊗ U_n) rho (U_1 ⊗ ... ⊗ U_n)^dagger` with one unitary per node.
pub fn apply_local_unitaries(
    rho: &DensityOperator,
    nodes: &[Node],
    unitaries: &[ComplexMatrix],
) -> Result<DensityOperator> {
    let dims = node_span(&rho.layout, nodes)?;
    if unitaries.len() != nodes.len() {
        return Err(Error::Dimension(format!("{} unitaries for {} nodes", unitaries.len(), nodes.len())));
    }
    for (u, &d) in unitaries.iter().zip(&dims) {
        check_unitary(u)?;
        if u.rows() != d {
            return Err(Error::Dimension(format!("{}x{} unitary on a node of dimension {d}", u.rows(), u.cols())));
        }
    }
    let u = kron_all(unitaries);
    Ok(DensityOperator {
        matrix: rho.matrix.conjugate_by(&u).hermitian_part(),
        layout: rho.layout.clone(),
    })
}

/// Applies one channel per node, node by node. A node whose output dimension
/// differs from its input becomes a single factor labeled with the node name.
pub fn apply_local_channels(
    rho: &DensityOperator,
    nodes: &[Node],
    channels: &[KrausChannel],
) -> Result<(DensityOperator, Vec<Node>)> {
    let in_dims = node_span(&rho.layout, nodes)?;
    if channels.len() != nodes.len() {
        return Err(Error::Dimension(format!("{} channels for {} nodes", channels.len(), nodes.len())));
    }
    for (ch, &d) in channels.iter().zip(&in_dims) {
        if ch.input_dim() != d {
            return Err(Error::Dimension(format!(
                "channel with input dimension {} on a node of dimension {d}",
                ch.input_dim()
            )));
        }
    }
    let mut dims: Vec<usize> = in_dims.clone();
    let mut m = rho.matrix.clone();
    for (k, ch) in channels.iter().enumerate() {
        let before: usize = dims[..k].iter().product();
        let after: usize = dims[k + 1..].iter().product();
        let mut out = None::<ComplexMatrix>;
        for op in ch.kraus_ops() {
            let term = m.conjugate_by(&embed_at(op, before, after));
            out = Some(match out {
                Some(acc) => &acc + &term,
                None => term,
            });
        }
        m = out.expect("channel has at least one Kraus operator");
        dims[k] = ch.output_dim();
    }
    let mut out_dims = Vec::new();
    let mut labels = Vec::new();
    let mut out_nodes = Vec::new();
    for ((node, ch), &d_in) in nodes.iter().zip(channels).zip(&in_dims) {
        if ch.output_dim() == d_in {
            for f in &node.factors {
                out_dims.push(rho.layout.dim_of(f)?);
                labels.push(f.clone());
            }
            out_nodes.push(node.clone());
        } else {
            out_dims.push(ch.output_dim());
            labels.push(node.label.clone());
            out_nodes.push(Node::new(node.label.clone(), vec![node.label.clone()]));
        }
    }
    let layout = SubsystemLayout::new(out_dims, labels)?;
    Ok((DensityOperator::new(m.hermitian_part(), layout)?, out_nodes))
}

/// `sum_k weights[k] * states[k]`
pub fn convex_mix(states: &[DensityOperator], weights: &[f64]) -> Result<DensityOperator> {
    if states.is_empty() || states.len() != weights.len() {
        return Err(Error::InvalidArgument(format!(
            "{} states with {} weights",
            states.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|&w| !(w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument("weights must be a probability vector".into()));
    }
    let layout = states[0].layout.clone();
    let mut m = ComplexMatrix::zeros(states[0].dim(), states[0].dim());
    for (s, &w) in states.iter().zip(weights) {
        if s.layout != layout {
            return Err(Error::Layout("states have different layouts".into()));
        }
        m = &m + &s.matrix.scale(w);
    }
    DensityOperator::new(m, layout)
}
