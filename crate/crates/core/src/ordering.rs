//! Geometric nested dissection orderings for the sparse direct solvers.
//!
//! Unknowns are the four local coefficients of each fine element, optionally
//! followed by four multipliers per coarse element of a patch.

use crate::linalg::{EliminationPlan, NO_PARENT};
use crate::mesh::{Mesh, MeshHierarchy, Patch};

/// Subdomains with at most this many fine elements are not split further.
const LEAF_ELEMENTS: usize = 4;

struct Builder {
    perm: Vec<usize>,
    bounds: Vec<usize>,
    parent: Vec<usize>,
}

impl Builder {
    fn new(n: usize) -> Self {
        Self {
            perm: Vec::with_capacity(n),
            bounds: vec![0],
            parent: Vec::new(),
        }
    }

    fn node(&mut self, dofs: impl IntoIterator<Item = usize>, children: &[usize]) -> usize {
        self.perm.extend(dofs);
        self.bounds.push(self.perm.len());
        self.parent.push(NO_PARENT);
        let id = self.parent.len() - 1;
        for &c in children {
            self.parent[c] = id;
        }
        id
    }

    fn finish(self) -> EliminationPlan {
        EliminationPlan {
            perm: self.perm,
            bounds: self.bounds,
            parent: self.parent,
        }
    }
}

/// `(x, y, item index)`.
type Item = (i64, i64, usize);

fn element_dofs(items: &[Item]) -> Vec<usize> {
    items
        .iter()
        .flat_map(|&(_, _, li)| (0..4).map(move |j| 4 * li + j))
        .collect()
}

/// Splits along the longer extent at the middle coordinate.
fn split(items: &[Item]) -> (bool, i64) {
    let (mut x0, mut x1, mut y0, mut y1) = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
    for &(x, y, _) in items {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 - x0 >= y1 - y0 {
        (true, (x0 + x1 + 1).div_euclid(2))
    } else {
        (false, (y0 + y1 + 1).div_euclid(2))
    }
}

/// Nested dissection of items on a grid with nearest-neighbour coupling; the
/// separator is the grid line through the middle coordinate.
fn grid_nd(
    b: &mut Builder,
    mut items: Vec<Item>,
    dofs: &dyn Fn(&[Item]) -> Vec<usize>,
    leaf: usize,
) -> usize {
    if items.len() <= leaf {
        items.sort_by_key(|it| it.2);
        return b.node(dofs(&items), &[]);
    }
    let (along_x, mid) = split(&items);
    let coord = |it: &Item| if along_x { it.0 } else { it.1 };
    let (mut left, mut right, mut sep) = (Vec::new(), Vec::new(), Vec::new());
    for it in items {
        match coord(&it).cmp(&mid) {
            std::cmp::Ordering::Less => left.push(it),
            std::cmp::Ordering::Greater => right.push(it),
            std::cmp::Ordering::Equal => sep.push(it),
        }
    }
    let mut kids = Vec::with_capacity(2);
    for part in [left, right] {
        if !part.is_empty() {
            kids.push(grid_nd(b, part, dofs, leaf));
        }
    }
    sep.sort_by_key(|it| it.2);
    b.node(dofs(&sep), &kids)
}

fn fine_nd(b: &mut Builder, items: Vec<Item>) -> usize {
    grid_nd(b, items, &element_dofs, LEAF_ELEMENTS)
}

/// Ordering for an SPD system over the listed fine elements (local index = position in `elements`).
pub fn element_plan(mesh: &Mesh, elements: &[usize]) -> EliminationPlan {
    let items: Vec<Item> = elements
        .iter()
        .enumerate()
        .map(|(li, &e)| {
            let [x, y] = mesh.cell(e);
            (x as i64, y as i64, li)
        })
        .collect();
    let mut b = Builder::new(4 * elements.len());
    if !items.is_empty() {
        fine_nd(&mut b, items);
    }
    b.finish()
}

/// Ordering for a system with a block of unknowns `offsets[i]..offsets[i + 1]` on each
/// element `elements[i]` of `mesh`, coupled across faces only.
pub fn block_plan(mesh: &Mesh, elements: &[usize], offsets: &[usize]) -> EliminationPlan {
    let items: Vec<Item> = elements
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            let [x, y] = mesh.cell(e);
            (x as i64, y as i64, i)
        })
        .collect();
    let n = offsets.last().copied().unwrap_or(0);
    let mut b = Builder::new(n);
    let dofs = |its: &[Item]| {
        its.iter()
            .flat_map(|&(_, _, i)| offsets[i]..offsets[i + 1])
            .collect()
    };
    if !items.is_empty() {
        grid_nd(&mut b, items, &dofs, 1);
    }
    b.finish()
}

struct PatchCtx<'a> {
    hier: &'a MeshHierarchy,
    patch: &'a Patch,
    claimed: Vec<bool>,
    multipliers: bool,
}

/// `(cx, cy, position in patch.members)`.
type Cell = (i64, i64, usize);

fn coarse_nd(b: &mut Builder, ctx: &mut PatchCtx, cells: Vec<Cell>) -> usize {
    let r = ctx.hier.ratio();
    let nc = r * r;
    if cells.len() == 1 {
        let p = cells[0].2;
        let fine = ctx.hier.fine();
        let items: Vec<Item> = (0..nc)
            .filter(|&k| !ctx.claimed[p * nc + k])
            .map(|k| {
                let e = ctx.patch.fine_elements[p * nc + k];
                let [x, y] = fine.cell(e);
                (x as i64, y as i64, p * nc + k)
            })
            .collect();
        let inner = if items.is_empty() {
            None
        } else {
            Some(fine_nd(b, items))
        };
        let kids: Vec<usize> = inner.into_iter().collect();
        if ctx.multipliers {
            let n = ctx.patch.num_fine_dofs();
            return b.node((0..4).map(|i| n + 4 * p + i), &kids);
        }
        return match kids.first() {
            Some(&k) => k,
            None => b.node(std::iter::empty(), &[]),
        };
    }
    let items: Vec<Item> = cells.iter().map(|&(x, y, p)| (x, y, p)).collect();
    let (along_x, mid) = split(&items);
    let coord = |c: &Cell| if along_x { c.0 } else { c.1 };
    let (left, right): (Vec<Cell>, Vec<Cell>) = cells.into_iter().partition(|c| coord(c) < mid);
    let mut sep = Vec::new();
    for &(_, _, p) in right.iter().filter(|c| coord(c) == mid) {
        for k in 0..nc {
            let first = if along_x { k % r == 0 } else { k / r == 0 };
            if first && !ctx.claimed[p * nc + k] {
                ctx.claimed[p * nc + k] = true;
                sep.push(p * nc + k);
            }
        }
    }
    let kids = [coarse_nd(b, ctx, left), coarse_nd(b, ctx, right)];
    b.node(
        sep.iter()
            .flat_map(|&li| (0..4).map(move |j| 4 * li + j))
            .collect::<Vec<_>>(),
        &kids,
    )
}

/// Ordering for the patch operator, optionally followed by the `4 * members` multipliers
/// of the patch constraints. Every multiplier block is eliminated after the
/// interior of its coarse element, which keeps the pivots of the KKT matrix away from zero
/// as long as each coarse element has at least two fine elements per direction.
pub fn patch_plan(hier: &MeshHierarchy, patch: &Patch, multipliers: bool) -> EliminationPlan {
    let coarse = hier.coarse();
    let cells: Vec<Cell> = patch
        .members
        .iter()
        .enumerate()
        .map(|(p, &c)| {
            let [x, y] = coarse.cell(c);
            (x as i64, y as i64, p)
        })
        .collect();
    let n = patch.num_fine_dofs()
        + if multipliers {
            4 * patch.members.len()
        } else {
            0
        };
    let mut b = Builder::new(n);
    let mut ctx = PatchCtx {
        hier,
        patch,
        claimed: vec![false; patch.fine_elements.len()],
        multipliers,
    };
    if !cells.is_empty() {
        coarse_nd(&mut b, &mut ctx, cells);
    }
    b.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_hierarchy, DomainSpec};

    fn is_permutation(p: &[usize]) -> bool {
        let mut s = p.to_vec();
        s.sort_unstable();
        s.iter().enumerate().all(|(i, &v)| i == v)
    }

    #[test]
    fn plans_are_permutations() {
        let hier = build_hierarchy(&DomainSpec::l_shape_mixed(), 2, 5).unwrap();
        let all: Vec<usize> = (0..hier.fine().num_elements()).collect();
        let p = element_plan(hier.fine(), &all);
        assert_eq!(p.perm.len(), 4 * all.len());
        assert!(is_permutation(&p.perm));
        for radius in [1, 2, 3] {
            let patch = hier.patch(7, radius).unwrap();
            for mult in [false, true] {
                let p = patch_plan(&hier, &patch, mult);
                let n = patch.num_fine_dofs() + if mult { 4 * patch.members.len() } else { 0 };
                assert_eq!(p.perm.len(), n);
                assert!(is_permutation(&p.perm));
                assert_eq!(*p.bounds.last().unwrap(), n);
            }
        }
    }
}
