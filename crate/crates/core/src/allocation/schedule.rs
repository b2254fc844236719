use super::AllocError;

/// Largest schedule horizon accepted, in frames.
pub const MAX_HORIZON: u64 = 5040;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Least common multiple of the periods: the length of the repeating
/// schedule. Fails above [`MAX_HORIZON`].
pub fn get_lcm(periods: &[u32]) -> Result<usize, AllocError> {
    let mut l: u64 = 1;
    for &p in periods {
        if p == 0 {
            return Err(AllocError::InvalidProblem("period 0".into()));
        }
        l = l / gcd(l, p as u64) * p as u64;
        if l > MAX_HORIZON {
            return Err(AllocError::HorizonTooLarge { lcm: l, max: MAX_HORIZON });
        }
    }
    Ok(l as usize)
}

/// Start offsets, one per period, such that every frame of the horizon is
/// processed by at least one and at most `det_per_frame` detectors.
///
/// Exhaustive backtracking; offsets are tried in ascending order so the
/// lexicographically smallest assignment is returned. Shifting all offsets
/// by one frame keeps a schedule valid, so the first offset is fixed to 0.
pub fn find_offsets(periods: &[u32], horizon: usize, det_per_frame: usize) -> Option<Vec<u32>> {
    if periods.is_empty() || horizon == 0 || det_per_frame == 0 {
        return None;
    }
    if periods.iter().any(|&p| p == 0 || horizon % p as usize != 0) {
        return None;
    }
    let starts: usize = periods.iter().map(|&p| horizon / p as usize).sum();
    if starts < horizon {
        return None;
    }
    // spare[i] = frames processed by detectors i.. in total
    let mut spare = vec![0usize; periods.len() + 1];
    for i in (0..periods.len()).rev() {
        spare[i] = spare[i + 1] + horizon / periods[i] as usize;
    }
    let mut cover = vec![0usize; horizon];
    let mut offsets = Vec::with_capacity(periods.len());
    let mut uncovered = horizon;
    if search(periods, det_per_frame, &spare, &mut cover, &mut uncovered, &mut offsets) {
        Some(offsets)
    } else {
        None
    }
}

fn search(
    periods: &[u32],
    dpf: usize,
    spare: &[usize],
    cover: &mut [usize],
    uncovered: &mut usize,
    offsets: &mut Vec<u32>,
) -> bool {
    let i = offsets.len();
    if i == periods.len() {
        return *uncovered == 0;
    }
    if spare[i] < *uncovered {
        return false;
    }
    let p = periods[i] as usize;
    let max_offset = if i == 0 { 1 } else { p };
    for o in 0..max_offset {
        if (o..cover.len()).step_by(p).any(|f| cover[f] >= dpf) {
            continue;
        }
        for f in (o..cover.len()).step_by(p) {
            if cover[f] == 0 {
                *uncovered -= 1;
            }
            cover[f] += 1;
        }
        offsets.push(o as u32);
        if search(periods, dpf, spare, cover, uncovered, offsets) {
            return true;
        }
        offsets.pop();
        for f in (o..cover.len()).step_by(p) {
            cover[f] -= 1;
            if cover[f] == 0 {
                *uncovered += 1;
            }
        }
    }
    false
}

/// Frames at which a detector with this period and offset starts.
pub fn start_frames(period: u32, offset: u32, horizon: usize) -> impl Iterator<Item = usize> {
    (offset as usize..horizon).step_by(period.max(1) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lcm_examples() {
        assert_eq!(get_lcm(&[1, 2]).unwrap(), 2);
        assert_eq!(get_lcm(&[1, 2, 3, 4, 5]).unwrap(), 60);
        assert_eq!(get_lcm(&[]).unwrap(), 1);
        assert_eq!(get_lcm(&[7, 8, 9, 10]).unwrap(), 2520);
        assert!(matches!(get_lcm(&[316, 233]), Err(AllocError::HorizonTooLarge { .. })));
    }

    #[test]
    fn offsets_cover_interleaved_pairs() {
        assert_eq!(find_offsets(&[2, 2], 2, 1), Some(vec![0, 1]));
        assert_eq!(find_offsets(&[1], 1, 1), Some(vec![0]));
        assert_eq!(find_offsets(&[2], 2, 2), None);
        assert_eq!(find_offsets(&[3, 3], 3, 2), None);
        // two period-2 detectors with period-1 coverage exceed one per frame
        assert_eq!(find_offsets(&[1, 2], 2, 1), None);
        assert_eq!(find_offsets(&[1, 2], 2, 2), Some(vec![0, 0]));
    }

    #[test]
    fn twelve_frame_fixture() {
        assert_eq!(find_offsets(&[4, 4], 4, 1), None);
        assert!(find_offsets(&[2, 4, 4], 4, 1).is_some());
        // two interleaved period-2 detectors fill the cycle; a period-4 one
        // fits on top only when frames may be processed twice
        assert_eq!(find_offsets(&[2, 2], 12, 1), Some(vec![0, 1]));
        assert_eq!(find_offsets(&[2, 2, 4], 12, 1), None);
        let o = find_offsets(&[2, 2, 4], 12, 2).unwrap();
        let mut cover = [0; 12];
        for (&p, &off) in [2u32, 2, 4].iter().zip(&o) {
            for f in start_frames(p, off, 12) {
                cover[f] += 1;
            }
        }
        assert_eq!(cover.iter().filter(|&&c| c == 2).count(), 3);
        assert!(cover.iter().all(|&c| (1..=2).contains(&c)));
        // 1/3 + 1/4 + 1/6 < 1: not enough starts for full coverage
        assert_eq!(find_offsets(&[3, 4, 6], 12, 2), None);
    }

    fn brute_force(periods: &[u32], horizon: usize, dpf: usize) -> bool {
        let mut idx = vec![0u32; periods.len()];
        loop {
            let mut cover = vec![0usize; horizon];
            for (&p, &o) in periods.iter().zip(&idx) {
                for f in start_frames(p, o, horizon) {
                    cover[f] += 1;
                }
            }
            if cover.iter().all(|&c| c >= 1 && c <= dpf) {
                return true;
            }
            let mut k = 0;
            loop {
                if k == idx.len() {
                    return false;
                }
                idx[k] += 1;
                if idx[k] < periods[k] {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn search_agrees_with_enumeration(
            periods in proptest::collection::vec(1u32..=4, 1..5),
            dpf in 1usize..=3,
        ) {
            let horizon = get_lcm(&periods).unwrap();
            let found = find_offsets(&periods, horizon, dpf);
            proptest::prop_assert_eq!(found.is_some(), brute_force(&periods, horizon, dpf));
            if let Some(o) = found {
                let mut cover = vec![0usize; horizon];
                for (&p, &off) in periods.iter().zip(&o) {
                    proptest::prop_assert!(off < p);
                    for f in start_frames(p, off, horizon) {
                        cover[f] += 1;
                    }
                }
                proptest::prop_assert!(cover.iter().all(|&c| c >= 1 && c <= dpf));
            }
        }
    }
}
