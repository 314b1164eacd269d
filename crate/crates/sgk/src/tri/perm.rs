//! Permutations of {0,1,2,3}, stored as an index into the lexicographic
//! table of all 24. Gluing permutations map vertex labels of one tetrahedron
//! to vertex labels of its neighbor.

use serde::{Deserialize, Serialize};

/// All 24 permutations as image arrays, lexicographically ordered.
pub const PERMS: [[u8; 4]; 24] = [
    [0, 1, 2, 3],
    [0, 1, 3, 2],
    [0, 2, 1, 3],
    [0, 2, 3, 1],
    [0, 3, 1, 2],
    [0, 3, 2, 1],
    [1, 0, 2, 3],
    [1, 0, 3, 2],
    [1, 2, 0, 3],
    [1, 2, 3, 0],
    [1, 3, 0, 2],
    [1, 3, 2, 0],
    [2, 0, 1, 3],
    [2, 0, 3, 1],
    [2, 1, 0, 3],
    [2, 1, 3, 0],
    [2, 3, 0, 1],
    [2, 3, 1, 0],
    [3, 0, 1, 2],
    [3, 0, 2, 1],
    [3, 1, 0, 2],
    [3, 1, 2, 0],
    [3, 2, 0, 1],
    [3, 2, 1, 0],
];

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Perm4(pub u8);

impl std::fmt::Debug for Perm4 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let im = self.images();
        write!(f, "Perm4({}{}{}{})", im[0], im[1], im[2], im[3])
    }
}

impl Perm4 {
    pub const IDENTITY: Perm4 = Perm4(0);

    pub fn from_images(images: [u8; 4]) -> Perm4 {
        for (i, p) in PERMS.iter().enumerate() {
            if *p == images {
                return Perm4(i as u8);
            }
        }
        panic!("not a permutation of 0..4: {images:?}");
    }

    pub fn images(self) -> [u8; 4] {
        PERMS[self.0 as usize]
    }

    pub fn apply(self, x: u8) -> u8 {
        PERMS[self.0 as usize][x as usize]
    }

    /// `self.after(q)` applies q first: x ↦ self(q(x)).
    pub fn after(self, q: Perm4) -> Perm4 {
        let a = self.images();
        let b = q.images();
        Perm4::from_images([
            a[b[0] as usize],
            a[b[1] as usize],
            a[b[2] as usize],
            a[b[3] as usize],
        ])
    }

    pub fn inverse(self) -> Perm4 {
        let im = self.images();
        let mut inv = [0u8; 4];
        for (i, &v) in im.iter().enumerate() {
            inv[v as usize] = i as u8;
        }
        Perm4::from_images(inv)
    }

    /// +1 for even permutations, -1 for odd.
    pub fn sign(self) -> i8 {
        let im = self.images();
        let mut s = 1i8;
        for i in 0..4 {
            for j in (i + 1)..4 {
                if im[i] > im[j] {
                    s = -s;
                }
            }
        }
        s
    }

    pub fn transposition(a: u8, b: u8) -> Perm4 {
        let mut im = [0u8, 1, 2, 3];
        im.swap(a as usize, b as usize);
        Perm4::from_images(im)
    }

    pub fn all() -> impl Iterator<Item = Perm4> {
        (0..24).map(|i| Perm4(i as u8))
    }
}

/// The 6 edges of a tetrahedron as (lo, hi) vertex pairs, in index order.
pub const EDGE_VERTS: [(u8, u8); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Edge index from an unordered vertex pair.
pub fn edge_index(a: u8, b: u8) -> u8 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    for (i, &(x, y)) in EDGE_VERTS.iter().enumerate() {
        if (x, y) == (lo, hi) {
            return i as u8;
        }
    }
    panic!("not an edge: ({a},{b})");
}

/// The three vertices of the face opposite vertex `f`, in increasing order.
pub fn face_verts(f: u8) -> [u8; 3] {
    let mut out = [0u8; 3];
    let mut k = 0;
    for v in 0..4u8 {
        if v != f {
            out[k] = v;
            k += 1;
        }
    }
    out
}
