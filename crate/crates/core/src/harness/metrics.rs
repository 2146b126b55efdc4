//! Exploration and mission metrics computed from recorded runs.

use serde::{Deserialize, Serialize};

use crate::agents::RndPair;
use crate::env::Terminal;
use crate::error::{Error, Result};
use crate::grid::GridWorld;

/// Per-cell visit counts, row-major with `y` as the row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisitMap {
    pub width: usize,
    pub height: usize,
    pub counts: Vec<u64>,
}

impl VisitMap {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, counts: vec![0; width * height] }
    }

    pub fn record(&mut self, cell: (usize, usize)) {
        self.counts[cell.1 * self.width + cell.0] += 1;
    }

    pub fn get(&self, x: usize, y: usize) -> u64 {
        self.counts[y * self.width + x]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn visited_cells(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    pub fn clear(&mut self) {
        self.counts.iter_mut().for_each(|c| *c = 0);
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.counts.chunks(self.width).map(|r| r.iter().map(|&c| c as f64).collect()).collect()
    }
}

/// Quadrant coverage and the two scores derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplorationScore {
    /// Fraction of cells visited in each quadrant: lower-left, lower-right,
    /// upper-left, upper-right.
    pub eq: [f64; 4],
    pub mean: f64,
    /// Population standard deviation of `eq`.
    pub std: f64,
    /// `mean * std * 100`.
    pub literal: f64,
    /// `mean * (1 - std) * 100`.
    pub uniformity: f64,
}

/// Splits the grid into four quadrants around `split` (the first column and
/// row of the upper halves, normally the start cell) and scores how much of
/// each was visited.
pub fn exploration_score(visits: &VisitMap, split: (usize, usize)) -> Result<ExplorationScore> {
    let (mx, my) = split;
    if visits.counts.is_empty() || visits.counts.len() != visits.width * visits.height {
        return Err(Error::usage("exploration score needs visit counts covering the grid"));
    }
    if mx == 0 || my == 0 || mx >= visits.width || my >= visits.height {
        return Err(Error::usage(format!(
            "quadrant split ({mx}, {my}) leaves an empty quadrant on a {}x{} grid",
            visits.width, visits.height
        )));
    }
    let mut seen = [0usize; 4];
    let mut cells = [0usize; 4];
    for y in 0..visits.height {
        for x in 0..visits.width {
            let q = (x >= mx) as usize + 2 * (y >= my) as usize;
            cells[q] += 1;
            if visits.get(x, y) > 0 {
                seen[q] += 1;
            }
        }
    }
    let mut eq = [0.0; 4];
    for q in 0..4 {
        eq[q] = seen[q] as f64 / cells[q] as f64;
    }
    Ok(score_from_eq(eq))
}

pub fn score_from_eq(eq: [f64; 4]) -> ExplorationScore {
    let mean = eq.iter().sum::<f64>() / 4.0;
    let std = (eq.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / 4.0).sqrt();
    ExplorationScore {
        eq,
        mean,
        std,
        literal: mean * std * 100.0,
        uniformity: mean * (1.0 - std) * 100.0,
    }
}

/// Predictor error at every cell of `grid`, as `height` rows of `width`.
pub fn predictor_loss_map(rnd: &RndPair, grid: &GridWorld) -> Result<Vec<Vec<f64>>> {
    let c = grid.config();
    (0..c.height)
        .map(|y| {
            (0..c.width)
                .map(|x| rnd.intrinsic(&grid.coordinate_feature((x, y))?))
                .collect()
        })
        .collect()
}

/// For each episode `e`, the fraction of episodes `1..=e` that ended in a
/// shoot-down.
pub fn shotdown_curve(terminals: &[Option<Terminal>]) -> Vec<f64> {
    let mut shot = 0usize;
    terminals
        .iter()
        .enumerate()
        .map(|(i, t)| {
            if *t == Some(Terminal::ShotDown) {
                shot += 1;
            }
            shot as f64 / (i + 1) as f64
        })
        .collect()
}

/// Trailing moving average with window `w` (shorter at the start).
pub fn moving_average(values: &[f64], w: usize) -> Vec<f64> {
    let w = w.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for i in 0..values.len() {
        sum += values[i];
        if i >= w {
            sum -= values[i - w];
        }
        out.push(sum / (i + 1).min(w) as f64);
    }
    out
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridConfig, RewardMode};
    use crate::nn::HiddenActivation;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_and_full_maps() {
        let mut m = VisitMap::new(4, 4);
        let s = exploration_score(&m, (2, 2)).unwrap();
        assert_eq!(s.eq, [0.0; 4]);
        assert_eq!(s.literal, 0.0);
        m.counts.iter_mut().for_each(|c| *c = 1);
        let s = exploration_score(&m, (2, 2)).unwrap();
        assert_eq!(s.eq, [1.0; 4]);
        assert_eq!(s.literal, 0.0);
        assert_eq!(s.uniformity, 100.0);
    }

    #[test]
    fn hand_computed_score() {
        let s = score_from_eq([0.8, 0.4, 0.4, 0.4]);
        assert!((s.mean - 0.5).abs() < 1e-12);
        assert!((s.std - 0.173_205_080_756_887_7).abs() < 1e-12);
        assert!((s.literal - 8.660_254_037_844_386).abs() < 1e-9);
    }

    #[test]
    fn quadrants_follow_midpoint() {
        let mut m = VisitMap::new(4, 4);
        m.record((3, 3));
        m.record((0, 0));
        let s = exploration_score(&m, (2, 2)).unwrap();
        assert_eq!(s.eq, [0.25, 0.0, 0.0, 0.25]);
        // Off-centre split: the lower-left quadrant is a single cell.
        let s = exploration_score(&m, (1, 1)).unwrap();
        assert_eq!(s.eq[0], 1.0);
        assert!((s.eq[3] - 1.0 / 9.0).abs() < 1e-12);
        assert!(exploration_score(&m, (0, 2)).is_err());
        assert!(exploration_score(&VisitMap::new(0, 0), (1, 1)).is_err());
    }

    #[test]
    fn shotdown_series() {
        use Terminal::*;
        let c = shotdown_curve(&[Some(ShotDown), Some(Arrived), Some(ShotDown), Some(Arrived)]);
        let want = [1.0, 0.5, 2.0 / 3.0, 0.5];
        for (a, b) in c.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(shotdown_curve(&[Some(ShotDown); 3]), vec![1.0; 3]);
        assert_eq!(shotdown_curve(&[Some(Timeout), None]), vec![0.0; 2]);
    }

    #[test]
    fn loss_map_shape_and_targeted_training() {
        let grid = GridWorld::new(GridConfig {
            width: 8,
            height: 6,
            start: [0, 0],
            goal: None,
            mode: RewardMode::NoReward,
            ..GridConfig::default()
        })
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut rnd = RndPair::new(&[14, 32, 8], HiddenActivation::Relu, 1e-2, &mut rng).unwrap();
        let map = predictor_loss_map(&rnd, &grid).unwrap();
        assert_eq!((map.len(), map[0].len()), (6, 8));
        assert!(map.iter().flatten().all(|&v| v > 0.0));

        // Train only on the upper-right quadrant.
        let records: Vec<_> = (4..8)
            .flat_map(|x| (3..6).map(move |y| (x, y)))
            .map(|c| rnd.record(&grid.coordinate_feature(c).unwrap()).unwrap())
            .collect();
        let batch: Vec<_> = records.iter().collect();
        for _ in 0..300 {
            rnd.train_on(&batch).unwrap();
        }
        let map = predictor_loss_map(&rnd, &grid).unwrap();
        let quad = |x0: usize, y0: usize| {
            let v: Vec<f64> = (y0..y0 + 3).flat_map(|y| map[y][x0..x0 + 4].to_vec()).collect();
            mean(&v)
        };
        assert!(quad(4, 3) < quad(0, 0));
    }

    #[test]
    fn moving_average_warms_up() {
        assert_eq!(moving_average(&[2.0, 4.0, 6.0, 8.0], 2), vec![2.0, 3.0, 5.0, 7.0]);
    }

    proptest! {
        #[test]
        fn score_is_symmetric(eq in proptest::array::uniform4(0.0f64..=1.0), perm in Just([3usize, 1, 0, 2])) {
            let a = score_from_eq(eq);
            let b = score_from_eq([eq[perm[0]], eq[perm[1]], eq[perm[2]], eq[perm[3]]]);
            prop_assert!((a.literal - b.literal).abs() < 1e-9);
            prop_assert!((a.uniformity - b.uniformity).abs() < 1e-9);
        }
    }
}
