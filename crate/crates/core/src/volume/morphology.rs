use super::{BinaryMask, OFFSETS_6};

fn has_background_neighbor(mask: &BinaryMask, i: usize) -> bool {
    let g = mask.grid();
    let c = g.coords(i);
    OFFSETS_6
        .iter()
        .any(|off| g.offset(c, *off).is_none_or(|j| !mask.at(j)))
}

/// Binary erosion with the 6-neighborhood cross, applied `iterations` times.
/// Out-of-grid voxels count as background.
pub fn erode(mask: &BinaryMask, iterations: usize) -> BinaryMask {
    let mut current = mask.clone();
    for _ in 0..iterations {
        let peel: Vec<usize> = current
            .ones()
            .filter(|&i| has_background_neighbor(&current, i))
            .collect();
        if peel.is_empty() {
            break;
        }
        for i in peel {
            current.set_index(i, false);
        }
    }
    current
}

/// Binary dilation with the 6-neighborhood cross.
pub fn dilate(mask: &BinaryMask, iterations: usize) -> BinaryMask {
    let g = *mask.grid();
    let mut current = mask.clone();
    for _ in 0..iterations {
        let grow: Vec<usize> = (0..g.len())
            .filter(|&i| !current.at(i))
            .filter(|&i| {
                let c = g.coords(i);
                OFFSETS_6
                    .iter()
                    .any(|off| g.offset(c, *off).is_some_and(|j| current.at(j)))
            })
            .collect();
        for i in grow {
            current.set_index(i, true);
        }
    }
    current
}

/// Foreground voxels with at least one background 6-neighbor.
pub fn boundary(mask: &BinaryMask) -> BinaryMask {
    let mut out = BinaryMask::empty(*mask.grid());
    for i in mask.ones() {
        if has_background_neighbor(mask, i) {
            out.set_index(i, true);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Grid;

    fn cube(n: usize) -> BinaryMask {
        BinaryMask::full(Grid::new([n, n, n], [1.0; 3]).unwrap())
    }

    fn ball(n: usize, r: f64) -> BinaryMask {
        let g = Grid::new([n, n, n], [1.0; 3]).unwrap();
        let c = (n as f64 - 1.0) / 2.0;
        BinaryMask::from_fn(g, |p| {
            let d2: f64 = p.iter().map(|&v| (v as f64 - c).powi(2)).sum();
            d2 <= r * r
        })
    }

    #[test]
    fn zero_iterations_is_identity() {
        let b = ball(11, 4.0);
        assert_eq!(erode(&b, 0), b);
    }

    #[test]
    fn cube_erodes_to_center() {
        let e = erode(&cube(3), 1);
        assert_eq!(e.count(), 1);
        assert!(e.get(1, 1, 1));
    }

    #[test]
    fn ball_erosion_matches_neighborhood_oracle() {
        let b = ball(15, 5.0);
        let e = erode(&b, 1);
        // oracle: keep voxel iff itself and all six face neighbors lie in the ball
        let g = *b.grid();
        let c = 7.0;
        let inside = |x: isize, y: isize, z: isize| {
            let d2 = (x as f64 - c).powi(2) + (y as f64 - c).powi(2) + (z as f64 - c).powi(2);
            d2 <= 25.0
        };
        for i in 0..g.len() {
            let [x, y, z] = g.coords(i).map(|v| v as isize);
            let expect = inside(x, y, z)
                && OFFSETS_6
                    .iter()
                    .all(|o| inside(x + o[0], y + o[1], z + o[2]));
            assert_eq!(e.at(i), expect);
        }
        // radius ~4: the oracle result is the radius-4 digital ball's cross-interior
        assert!(e.get(7, 7, 11));
        assert!(!e.get(7, 7, 12));
    }

    #[test]
    fn erosion_is_monotone() {
        let b = ball(15, 6.0);
        let mut prev = b.clone();
        for k in 1..5 {
            let e = erode(&b, k);
            assert!(e.is_subset_of(&prev));
            prev = e;
        }
    }

    #[test]
    fn boundary_cases() {
        let mut single = BinaryMask::empty(Grid::new([3, 3, 3], [1.0; 3]).unwrap());
        single.set(1, 1, 1, true);
        assert_eq!(boundary(&single), single);

        let shell = boundary(&cube(3));
        assert_eq!(shell.count(), 26);
        assert!(!shell.get(1, 1, 1));

        let mut tube = BinaryMask::empty(Grid::new([12, 3, 3], [1.0; 3]).unwrap());
        for x in 1..11 {
            tube.set(x, 1, 1, true);
        }
        assert_eq!(boundary(&tube), tube);
    }

    #[test]
    fn interior_after_boundary_removal_touches_no_background() {
        let b = ball(13, 5.0);
        let inner = b.minus(&boundary(&b)).unwrap();
        assert!(boundary(&b).is_subset_of(&b));
        let g = *b.grid();
        for i in inner.ones() {
            let c = g.coords(i);
            for off in OFFSETS_6 {
                let j = g.offset(c, off).unwrap();
                assert!(b.at(j));
            }
        }
    }

    #[test]
    fn dilate_single_voxel() {
        let mut m = BinaryMask::empty(Grid::new([3, 3, 3], [1.0; 3]).unwrap());
        m.set(1, 1, 1, true);
        assert_eq!(dilate(&m, 1).count(), 7);
    }
}
