use super::diagram::{PersistenceDiagram, PersistencePair};
use super::filtration::Filtration;

/// Symmetric difference of two ascending index lists.
fn add_columns(target: &mut Vec<u32>, other: &[u32], scratch: &mut Vec<u32>) {
    scratch.clear();
    let (mut i, mut j) = (0, 0);
    while i < target.len() && j < other.len() {
        match target[i].cmp(&other[j]) {
            std::cmp::Ordering::Less => {
                scratch.push(target[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                scratch.push(other[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    scratch.extend_from_slice(&target[i..]);
    scratch.extend_from_slice(&other[j..]);
    std::mem::swap(target, scratch);
}

/// Z/2 column reduction with clearing, highest dimension first.
///
/// Returns `low[j]` for every column (None when the column reduced to zero).
pub(crate) fn reduce(filt: &Filtration) -> Vec<Option<u32>> {
    let mut cols = filt.boundary_columns();
    let n = cols.len();
    let mut low: Vec<Option<u32>> = vec![None; n];
    let mut owner: Vec<u32> = vec![u32::MAX; n];
    let mut cleared = vec![false; n];
    let mut scratch = Vec::new();
    for dim in (1..=3).rev() {
        for j in 0..n {
            if filt.simplices[j].simplex.dim() != dim || cleared[j] {
                continue;
            }
            let mut col = std::mem::take(&mut cols[j]);
            while let Some(&l) = col.last() {
                let k = owner[l as usize];
                if k == u32::MAX {
                    break;
                }
                add_columns(&mut col, &cols[k as usize], &mut scratch);
            }
            if let Some(&l) = col.last() {
                owner[l as usize] = j as u32;
                low[j] = Some(l);
                cleared[l as usize] = true;
                cols[l as usize].clear();
            }
            cols[j] = col;
        }
    }
    low
}

/// Persistence pairs of the filtration in dimensions 0..=2; zero-lifetime
/// pairs are dropped, unpaired positive simplices become infinite bars.
pub fn compute_persistence(filt: &Filtration) -> PersistenceDiagram {
    let low = reduce(filt);
    let n = filt.len();
    let mut paired = vec![false; n];
    let mut pairs = Vec::new();
    for (j, l) in low.iter().enumerate() {
        if let Some(b) = *l {
            let b = b as usize;
            paired[b] = true;
            paired[j] = true;
            let birth = &filt.simplices[b];
            let death = &filt.simplices[j];
            if birth.simplex.dim() <= 2 && death.value > birth.value {
                pairs.push(PersistencePair {
                    dim: birth.simplex.dim(),
                    birth: birth.value,
                    death: death.value,
                    birth_index: b,
                    death_index: Some(j),
                    birth_simplex: birth.simplex,
                    death_simplex: Some(death.simplex),
                });
            }
        }
    }
    for (j, s) in filt.simplices.iter().enumerate() {
        if !paired[j] && low[j].is_none() && s.simplex.dim() <= 2 {
            pairs.push(PersistencePair {
                dim: s.simplex.dim(),
                birth: s.value,
                death: f64::INFINITY,
                birth_index: j,
                death_index: None,
                birth_simplex: s.simplex,
                death_simplex: None,
            });
        }
    }
    PersistenceDiagram::new(pairs)
}
