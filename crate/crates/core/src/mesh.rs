//! Nested Cartesian quadrilateral meshes on the unit square and the L-shape.
//!
//! Elements are enumerated row-major (x fastest) over the cells of a uniform
//! `2^level x 2^level` grid that lie inside the domain. Faces are enumerated
//! once each while sweeping the elements in that order. An interior face is
//! oriented from its lower-numbered element (`minus`) to its higher-numbered
//! one (`plus`), so interior normals always point in `+x` or `+y`; boundary
//! normals point outward.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Finest supported refinement level; keeps every index inside `u32`.
pub const MAX_LEVEL: u32 = 15;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DomainKind {
    UnitSquare,
    /// Unit square with the lower right quadrant `(1/2,1) x (0,1/2)` removed.
    LShape,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

/// An axis-aligned line `x = c` or `y = c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Line {
    X(f64),
    Y(f64),
}

/// Tags every boundary face lying on `line` (and, if given, inside `range`
/// along the line) with `kind`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySelector {
    pub line: Line,
    pub range: Option<(f64, f64)>,
    pub kind: BoundaryKind,
}

impl BoundarySelector {
    pub fn new(line: Line, kind: BoundaryKind) -> Self {
        Self {
            line,
            range: None,
            kind,
        }
    }

    fn matches(&self, face_line: Line, lo: f64, hi: f64) -> bool {
        let on_line = match (self.line, face_line) {
            (Line::X(a), Line::X(b)) | (Line::Y(a), Line::Y(b)) => a == b,
            _ => false,
        };
        on_line && self.range.map_or(true, |(rlo, rhi)| lo >= rlo && hi <= rhi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub selectors: Vec<BoundarySelector>,
}

impl DomainSpec {
    pub fn new(kind: DomainKind, selectors: Vec<BoundarySelector>) -> Result<Self> {
        if !selectors.iter().any(|s| s.kind == BoundaryKind::Dirichlet) {
            return Err(Error::Config(
                "the Dirichlet boundary must be nonempty".into(),
            ));
        }
        Ok(Self { kind, selectors })
    }

    /// Homogeneous Dirichlet conditions on the whole boundary.
    pub fn unit_square_dirichlet() -> Self {
        Self::all_dirichlet(DomainKind::UnitSquare)
    }

    pub fn all_dirichlet(kind: DomainKind) -> Self {
        let mut selectors = vec![];
        for c in [0.0, 0.5, 1.0] {
            selectors.push(BoundarySelector::new(Line::X(c), BoundaryKind::Dirichlet));
            selectors.push(BoundarySelector::new(Line::Y(c), BoundaryKind::Dirichlet));
        }
        Self { kind, selectors }
    }

    /// L-shape with Neumann conditions on `y = 0` and `x = 1`, Dirichlet elsewhere.
    pub fn l_shape_mixed() -> Self {
        use BoundaryKind::*;
        Self {
            kind: DomainKind::LShape,
            selectors: vec![
                BoundarySelector::new(Line::Y(0.0), Neumann),
                BoundarySelector::new(Line::X(1.0), Neumann),
                BoundarySelector::new(Line::X(0.0), Dirichlet),
                BoundarySelector::new(Line::Y(1.0), Dirichlet),
                BoundarySelector::new(Line::X(0.5), Dirichlet),
                BoundarySelector::new(Line::Y(0.5), Dirichlet),
            ],
        }
    }

    pub fn min_level(&self) -> u32 {
        match self.kind {
            DomainKind::UnitSquare => 0,
            DomainKind::LShape => 1,
        }
    }

    fn contains_cell(&self, n: usize, ix: usize, iy: usize) -> bool {
        match self.kind {
            DomainKind::UnitSquare => true,
            DomainKind::LShape => !(ix >= n / 2 && iy < n / 2),
        }
    }

    /// Whether the point lies in the closed domain.
    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        let in_square = (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y);
        match self.kind {
            DomainKind::UnitSquare => in_square,
            DomainKind::LShape => in_square && !(x > 0.5 && y < 0.5),
        }
    }

    fn classify(&self, line: Line, lo: f64, hi: f64) -> Result<BoundaryKind> {
        let mut found: Option<BoundaryKind> = None;
        for s in &self.selectors {
            if s.matches(line, lo, hi) {
                match found {
                    Some(k) if k != s.kind => {
                        return Err(Error::Config(format!(
                            "boundary face {line:?} [{lo}, {hi}] is both Dirichlet and Neumann"
                        )))
                    }
                    _ => found = Some(s.kind),
                }
            }
        }
        found.ok_or_else(|| {
            Error::Config(format!(
                "boundary face {line:?} [{lo}, {hi}] is not covered by any selector"
            ))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighbor {
    Element(usize),
    Boundary(BoundaryKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Face {
    pub minus: usize,
    pub plus: Neighbor,
    /// Axis of the unit normal; `Axis::X` is a vertical face.
    pub normal_axis: Axis,
    /// `+1` or `-1`; always `+1` on interior faces.
    pub normal_sign: i8,
    /// Lower/left end point in vertex index coordinates.
    pub origin: [u32; 2],
}

impl Face {
    pub fn is_interior(&self) -> bool {
        matches!(self.plus, Neighbor::Element(_))
    }

    pub fn boundary_kind(&self) -> Option<BoundaryKind> {
        match self.plus {
            Neighbor::Boundary(k) => Some(k),
            Neighbor::Element(_) => None,
        }
    }

    /// Faces entering the penalty and flux sums: interior and Dirichlet.
    pub fn is_active(&self) -> bool {
        self.boundary_kind() != Some(BoundaryKind::Neumann)
    }

    pub fn plus_element(&self) -> Option<usize> {
        match self.plus {
            Neighbor::Element(e) => Some(e),
            Neighbor::Boundary(_) => None,
        }
    }

    /// The two end points in vertex index coordinates.
    pub fn endpoints(&self) -> [[u32; 2]; 2] {
        let [x, y] = self.origin;
        match self.normal_axis {
            Axis::X => [[x, y], [x, y + 1]],
            Axis::Y => [[x, y], [x + 1, y]],
        }
    }
}

/// Per-element face ids, indexed by [`Side`].
pub type ElementFaces = [usize; 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left = 0,
    Right = 1,
    Bottom = 2,
    Top = 3,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    level: u32,
    kind: DomainKind,
    n: usize,
    cells: Vec<[u32; 2]>,
    lookup: Vec<u32>,
    faces: Vec<Face>,
    element_faces: Vec<ElementFaces>,
}

impl Mesh {
    pub fn new(domain: &DomainSpec, level: u32) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::Config(format!(
                "level {level} exceeds the supported maximum {MAX_LEVEL}"
            )));
        }
        if level < domain.min_level() {
            return Err(Error::Config(format!(
                "level {level} does not resolve the {:?} domain",
                domain.kind
            )));
        }
        let n = 1usize << level;
        let mut cells = Vec::new();
        let mut lookup = vec![NONE; n * n];
        for iy in 0..n {
            for ix in 0..n {
                if domain.contains_cell(n, ix, iy) {
                    lookup[iy * n + ix] = cells.len() as u32;
                    cells.push([ix as u32, iy as u32]);
                }
            }
        }
        let mut mesh = Self {
            level,
            kind: domain.kind,
            n,
            cells,
            lookup,
            faces: Vec::new(),
            element_faces: Vec::new(),
        };
        mesh.build_faces(domain)?;
        Ok(mesh)
    }

    fn build_faces(&mut self, domain: &DomainSpec) -> Result<()> {
        let h = self.width_f64();
        let ne = self.cells.len();
        let mut element_faces = vec![[usize::MAX; 4]; ne];
        let mut faces = Vec::with_capacity(2 * ne + 2 * self.n);
        for e in 0..ne {
            let [ix, iy] = self.cells[e];
            let (x, y) = (ix as f64 * h, iy as f64 * h);
            let left = self.neighbor(e, Side::Left);
            let bottom = self.neighbor(e, Side::Bottom);
            let right = self.neighbor(e, Side::Right);
            let top = self.neighbor(e, Side::Top);
            if left.is_none() {
                let kind = domain.classify(Line::X(x), y, y + h)?;
                element_faces[e][Side::Left as usize] = faces.len();
                faces.push(Face {
                    minus: e,
                    plus: Neighbor::Boundary(kind),
                    normal_axis: Axis::X,
                    normal_sign: -1,
                    origin: [ix, iy],
                });
            }
            if bottom.is_none() {
                let kind = domain.classify(Line::Y(y), x, x + h)?;
                element_faces[e][Side::Bottom as usize] = faces.len();
                faces.push(Face {
                    minus: e,
                    plus: Neighbor::Boundary(kind),
                    normal_axis: Axis::Y,
                    normal_sign: -1,
                    origin: [ix, iy],
                });
            }
            let id = faces.len();
            element_faces[e][Side::Right as usize] = id;
            match right {
                Some(r) => {
                    element_faces[r][Side::Left as usize] = id;
                    faces.push(Face {
                        minus: e,
                        plus: Neighbor::Element(r),
                        normal_axis: Axis::X,
                        normal_sign: 1,
                        origin: [ix + 1, iy],
                    });
                }
                None => {
                    let kind = domain.classify(Line::X(x + h), y, y + h)?;
                    faces.push(Face {
                        minus: e,
                        plus: Neighbor::Boundary(kind),
                        normal_axis: Axis::X,
                        normal_sign: 1,
                        origin: [ix + 1, iy],
                    });
                }
            }
            let id = faces.len();
            element_faces[e][Side::Top as usize] = id;
            match top {
                Some(t) => {
                    element_faces[t][Side::Bottom as usize] = id;
                    faces.push(Face {
                        minus: e,
                        plus: Neighbor::Element(t),
                        normal_axis: Axis::Y,
                        normal_sign: 1,
                        origin: [ix, iy + 1],
                    });
                }
                None => {
                    let kind = domain.classify(Line::Y(y + h), x, x + h)?;
                    faces.push(Face {
                        minus: e,
                        plus: Neighbor::Boundary(kind),
                        normal_axis: Axis::Y,
                        normal_sign: 1,
                        origin: [ix, iy + 1],
                    });
                }
            }
        }
        self.faces = faces;
        self.element_faces = element_faces;
        Ok(())
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    /// Cells per side of the bounding grid.
    pub fn cells_per_side(&self) -> usize {
        self.n
    }

    pub fn width_f64(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Element width `2^-level`; also the diameter of every face.
    pub fn width<S: Real>(&self) -> S {
        S::lit(self.width_f64())
    }

    pub fn num_elements(&self) -> usize {
        self.cells.len()
    }

    pub fn cell(&self, e: usize) -> [u32; 2] {
        self.cells[e]
    }

    pub fn element_at(&self, ix: i64, iy: i64) -> Option<usize> {
        let n = self.n as i64;
        if ix < 0 || iy < 0 || ix >= n || iy >= n {
            return None;
        }
        match self.lookup[(iy * n + ix) as usize] {
            NONE => None,
            e => Some(e as usize),
        }
    }

    pub fn neighbor(&self, e: usize, side: Side) -> Option<usize> {
        let [ix, iy] = self.cells[e];
        let (ix, iy) = (ix as i64, iy as i64);
        match side {
            Side::Left => self.element_at(ix - 1, iy),
            Side::Right => self.element_at(ix + 1, iy),
            Side::Bottom => self.element_at(ix, iy - 1),
            Side::Top => self.element_at(ix, iy + 1),
        }
    }

    /// Lower left corner of element `e`.
    pub fn origin<S: Real>(&self, e: usize) -> [S; 2] {
        let h = self.width_f64();
        let [ix, iy] = self.cells[e];
        [S::lit(ix as f64 * h), S::lit(iy as f64 * h)]
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn face(&self, f: usize) -> &Face {
        &self.faces[f]
    }

    pub fn element_faces(&self, e: usize) -> ElementFaces {
        self.element_faces[e]
    }

    /// Elements whose closure contains the vertex `(vx, vy)` (index coordinates).
    pub fn elements_at_vertex(&self, vx: u32, vy: u32) -> impl Iterator<Item = usize> + '_ {
        let (vx, vy) = (vx as i64, vy as i64);
        [(-1, -1), (0, -1), (-1, 0), (0, 0)]
            .into_iter()
            .filter_map(move |(dx, dy)| self.element_at(vx + dx, vy + dy))
    }

    /// Elements sharing at least a vertex with `e` (excluding `e`), row-major.
    pub fn vertex_neighbors(&self, e: usize) -> impl Iterator<Item = usize> + '_ {
        let [ix, iy] = self.cells[e];
        let (ix, iy) = (ix as i64, iy as i64);
        (-1..=1)
            .flat_map(move |dy| (-1..=1).map(move |dx| (dx, dy)))
            .filter(|&(dx, dy)| (dx, dy) != (0, 0))
            .filter_map(move |(dx, dy)| self.element_at(ix + dx, iy + dy))
    }
}

/// Face ids split by boundary class.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FacePartition {
    pub interior: Vec<usize>,
    pub dirichlet: Vec<usize>,
    pub neumann: Vec<usize>,
}

/// Re-derives the boundary tags of `mesh` from `domain` and partitions its faces.
pub fn classify_faces(mesh: &Mesh, domain: &DomainSpec) -> Result<FacePartition> {
    if domain.kind != mesh.kind {
        return Err(Error::Config("mesh and domain kinds differ".into()));
    }
    if !domain
        .selectors
        .iter()
        .any(|s| s.kind == BoundaryKind::Dirichlet)
    {
        return Err(Error::Config(
            "the Dirichlet boundary must be nonempty".into(),
        ));
    }
    let h = mesh.width_f64();
    let mut part = FacePartition::default();
    for (id, face) in mesh.faces().iter().enumerate() {
        if face.is_interior() {
            part.interior.push(id);
            continue;
        }
        let [vx, vy] = face.origin;
        let (x, y) = (vx as f64 * h, vy as f64 * h);
        let kind = match face.normal_axis {
            Axis::X => domain.classify(Line::X(x), y, y + h)?,
            Axis::Y => domain.classify(Line::Y(y), x, x + h)?,
        };
        match kind {
            BoundaryKind::Dirichlet => part.dirichlet.push(id),
            BoundaryKind::Neumann => part.neumann.push(id),
        }
    }
    Ok(part)
}

/// A coarse mesh and its uniform refinement.
#[derive(Debug, Clone)]
pub struct MeshHierarchy {
    domain: DomainSpec,
    coarse: Mesh,
    fine: Mesh,
    ratio: usize,
    children: Vec<usize>,
    parent: Vec<(u32, u32)>,
}

impl MeshHierarchy {
    pub fn coarse(&self) -> &Mesh {
        &self.coarse
    }

    pub fn fine(&self) -> &Mesh {
        &self.fine
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    /// Fine cells per coarse cell along one axis, `2^(fine - coarse)`.
    pub fn ratio(&self) -> usize {
        self.ratio
    }

    pub fn children_per_element(&self) -> usize {
        self.ratio * self.ratio
    }

    /// Fine children of coarse element `c`, local index `cx + ratio * cy`.
    pub fn children(&self, c: usize) -> &[usize] {
        let nc = self.children_per_element();
        &self.children[c * nc..(c + 1) * nc]
    }

    /// Parent coarse element and local child index of fine element `e`.
    pub fn parent(&self, e: usize) -> (usize, usize) {
        let (c, k) = self.parent[e];
        (c as usize, k as usize)
    }

    /// Coarse layer index of every coarse element relative to `center`:
    /// `center` has layer 1 and `c` lies in `Patch(center, L)` iff its layer is `<= L`.
    pub fn coarse_layers(&self, center: usize) -> Vec<u32> {
        let mesh = &self.coarse;
        let mut layer = vec![0u32; mesh.num_elements()];
        let mut queue = VecDeque::new();
        layer[center] = 1;
        queue.push_back(center);
        while let Some(c) = queue.pop_front() {
            for nb in mesh.vertex_neighbors(c) {
                if layer[nb] == 0 {
                    layer[nb] = layer[c] + 1;
                    queue.push_back(nb);
                }
            }
        }
        layer
    }

    /// Element patch of `radius` coarse layers around `center`.
    pub fn patch(&self, center: usize, radius: usize) -> Result<Patch> {
        if radius < 1 {
            return Err(Error::Config("patch radius must be at least 1".into()));
        }
        if center >= self.coarse.num_elements() {
            return Err(Error::Config(format!("no coarse element {center}")));
        }
        let layers = self.coarse_layers(center);
        let members: Vec<usize> = (0..layers.len())
            .filter(|&c| layers[c] as usize <= radius)
            .collect();
        Ok(Patch::from_members(self, center, radius, members))
    }

    /// The patch covering the whole domain.
    pub fn whole_domain_patch(&self, center: usize) -> Patch {
        let members = (0..self.coarse.num_elements()).collect();
        Patch::from_members(self, center, usize::MAX, members)
    }
}

/// Builds a nested pair of meshes, the fine one `fine_level - coarse_level`
/// uniform quadrisections of the coarse one.
pub fn build_hierarchy(
    domain: &DomainSpec,
    coarse_level: u32,
    fine_level: u32,
) -> Result<MeshHierarchy> {
    if coarse_level > fine_level {
        return Err(Error::Config(format!(
            "coarse level {coarse_level} is finer than fine level {fine_level}"
        )));
    }
    let coarse = Mesh::new(domain, coarse_level)?;
    let fine = Mesh::new(domain, fine_level)?;
    let ratio = 1usize << (fine_level - coarse_level);
    let nc = ratio * ratio;
    let mut children = vec![0usize; coarse.num_elements() * nc];
    let mut parent = vec![(0u32, 0u32); fine.num_elements()];
    for c in 0..coarse.num_elements() {
        let [cx, cy] = coarse.cell(c);
        for ky in 0..ratio {
            for kx in 0..ratio {
                let k = kx + ratio * ky;
                let fx = (cx as usize * ratio + kx) as i64;
                let fy = (cy as usize * ratio + ky) as i64;
                let e = fine
                    .element_at(fx, fy)
                    .ok_or_else(|| Error::Numerical("fine mesh does not nest".into()))?;
                children[c * nc + k] = e;
                parent[e] = (c as u32, k as u32);
            }
        }
    }
    Ok(MeshHierarchy {
        domain: domain.clone(),
        coarse,
        fine,
        ratio,
        children,
        parent,
    })
}

/// A union of coarse elements around a center element, with the fine
/// elements and faces it induces.
///
/// Fine elements are stored coarse-major: the children of `members[0]` in
/// child order, then those of `members[1]`, and so on.
#[derive(Debug, Clone)]
pub struct Patch {
    pub center: usize,
    /// `usize::MAX` for the whole-domain patch.
    pub radius: usize,
    pub members: Vec<usize>,
    pub fine_elements: Vec<usize>,
    /// Fine faces with at least one adjacent fine element in the patch.
    pub faces: Vec<usize>,
    local_of_fine: Vec<u32>,
}

impl Patch {
    fn from_members(
        hier: &MeshHierarchy,
        center: usize,
        radius: usize,
        members: Vec<usize>,
    ) -> Self {
        let fine = hier.fine();
        let mut fine_elements = Vec::with_capacity(members.len() * hier.children_per_element());
        for &c in &members {
            fine_elements.extend_from_slice(hier.children(c));
        }
        let mut local_of_fine = vec![NONE; fine.num_elements()];
        for (i, &e) in fine_elements.iter().enumerate() {
            local_of_fine[e] = i as u32;
        }
        let mut in_patch = vec![false; fine.faces().len()];
        for &e in &fine_elements {
            for f in fine.element_faces(e) {
                in_patch[f] = true;
            }
        }
        let faces = (0..in_patch.len()).filter(|&f| in_patch[f]).collect();
        Self {
            center,
            radius,
            members,
            fine_elements,
            faces,
            local_of_fine,
        }
    }

    pub fn contains_coarse(&self, c: usize) -> bool {
        self.members.binary_search(&c).is_ok()
    }

    /// Position of fine element `e` in `fine_elements`.
    pub fn local_index(&self, e: usize) -> Option<usize> {
        match self.local_of_fine[e] {
            NONE => None,
            i => Some(i as usize),
        }
    }

    pub fn num_fine_dofs(&self) -> usize {
        4 * self.fine_elements.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn element_counts() {
        let sq = DomainSpec::unit_square_dirichlet();
        let l = DomainSpec::l_shape_mixed();
        assert_eq!(Mesh::new(&sq, 1).unwrap().num_elements(), 4);
        assert_eq!(Mesh::new(&l, 1).unwrap().num_elements(), 3);
        for level in 1..6 {
            assert_eq!(
                Mesh::new(&sq, level).unwrap().num_elements(),
                4usize.pow(level)
            );
            assert_eq!(
                Mesh::new(&l, level).unwrap().num_elements(),
                3 * 4usize.pow(level - 1)
            );
        }
    }

    #[test]
    fn level_range_is_checked() {
        let sq = DomainSpec::unit_square_dirichlet();
        assert!(matches!(
            Mesh::new(&sq, MAX_LEVEL + 1),
            Err(Error::Config(_))
        ));
        let l = DomainSpec::l_shape_mixed();
        assert!(matches!(Mesh::new(&l, 0), Err(Error::Config(_))));
        assert!(build_hierarchy(&sq, 3, 2).is_err());
    }

    #[test]
    fn children_counts_and_parent_consistency() {
        let l = DomainSpec::l_shape_mixed();
        let hier = build_hierarchy(&l, 2, 4).unwrap();
        assert_eq!(hier.children_per_element(), 16);
        for c in 0..hier.coarse().num_elements() {
            for (k, &e) in hier.children(c).iter().enumerate() {
                assert_eq!(hier.parent(e), (c, k));
            }
        }
        let total: usize = (0..hier.coarse().num_elements())
            .map(|c| hier.children(c).len())
            .sum();
        assert_eq!(total, hier.fine().num_elements());
    }

    #[test]
    fn unit_square_level_one_faces() {
        let sq = DomainSpec::unit_square_dirichlet();
        let mesh = Mesh::new(&sq, 1).unwrap();
        let part = classify_faces(&mesh, &sq).unwrap();
        assert_eq!(part.dirichlet.len(), 8);
        assert_eq!(part.interior.len(), 4);
        assert!(part.neumann.is_empty());
    }

    #[test]
    fn all_neumann_is_rejected() {
        let sel = vec![
            BoundarySelector::new(Line::X(0.0), BoundaryKind::Neumann),
            BoundarySelector::new(Line::X(1.0), BoundaryKind::Neumann),
        ];
        assert!(matches!(
            DomainSpec::new(DomainKind::UnitSquare, sel),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn uncovered_boundary_is_rejected() {
        let sel = vec![BoundarySelector::new(Line::X(0.0), BoundaryKind::Dirichlet)];
        let dom = DomainSpec::new(DomainKind::UnitSquare, sel).unwrap();
        assert!(matches!(Mesh::new(&dom, 2), Err(Error::Config(_))));
    }

    #[test]
    fn face_orientation() {
        let sq = DomainSpec::unit_square_dirichlet();
        let mesh = Mesh::new(&sq, 3).unwrap();
        for f in mesh.faces() {
            if let Some(p) = f.plus_element() {
                assert!(f.minus < p);
                assert_eq!(f.normal_sign, 1);
                let side = match f.normal_axis {
                    Axis::X => Side::Right,
                    Axis::Y => Side::Top,
                };
                assert_eq!(mesh.neighbor(f.minus, side), Some(p));
            }
        }
    }

    #[test]
    fn interior_and_corner_patches() {
        let sq = DomainSpec::unit_square_dirichlet();
        let hier = build_hierarchy(&sq, 2, 3).unwrap();
        let interior = hier.coarse().element_at(1, 1).unwrap();
        assert_eq!(hier.patch(interior, 1).unwrap().members, vec![interior]);
        assert_eq!(hier.patch(interior, 2).unwrap().members.len(), 9);
        let corner = hier.coarse().element_at(0, 0).unwrap();
        assert_eq!(hier.patch(corner, 2).unwrap().members.len(), 4);
        assert_eq!(hier.patch(corner, 10).unwrap().members.len(), 16);
    }

    #[test]
    fn patch_faces_touch_patch() {
        let l = DomainSpec::l_shape_mixed();
        let hier = build_hierarchy(&l, 2, 3).unwrap();
        let p = hier.patch(5, 2).unwrap();
        for &f in &p.faces {
            let face = hier.fine().face(f);
            let touches = p.local_index(face.minus).is_some()
                || face
                    .plus_element()
                    .is_some_and(|e| p.local_index(e).is_some());
            assert!(touches);
        }
        for (i, &e) in p.fine_elements.iter().enumerate() {
            assert_eq!(p.local_index(e), Some(i));
        }
    }
}
