use crate::error::{CoreError, Result};
use crate::io::{Label, SampleMeta, Sex};
use rand::Rng;

fn cell_index(sex: Sex, label: Label) -> usize {
    match (sex, label) {
        (Sex::M, Label::Pd) => 0,
        (Sex::M, Label::Hc) => 1,
        (Sex::F, Label::Pd) => 2,
        (Sex::F, Label::Hc) => 3,
    }
}

pub fn cell_name(index: usize) -> &'static str {
    ["(M, PD)", "(M, HC)", "(F, PD)", "(F, HC)"][index]
}

/// Draws samples by first picking one of the four sex-by-status cells
/// uniformly, then a sample uniformly within that cell, with replacement.
#[derive(Debug, Clone)]
pub struct BalancedSampler {
    cells: [Vec<usize>; 4],
}

impl BalancedSampler {
    pub fn new(metas: &[SampleMeta]) -> Result<Self> {
        let mut cells: [Vec<usize>; 4] = Default::default();
        for (i, meta) in metas.iter().enumerate() {
            cells[cell_index(meta.sex, meta.label)].push(i);
        }
        for (c, cell) in cells.iter().enumerate() {
            if cell.is_empty() {
                return Err(CoreError::Config(format!(
                    "balanced sampler cell {} is empty",
                    cell_name(c)
                )));
            }
        }
        Ok(BalancedSampler { cells })
    }

    pub fn draw<R: Rng>(&self, rng: &mut R) -> usize {
        let cell = &self.cells[rng.random_range(0..4)];
        cell[rng.random_range(0..cell.len())]
    }
}

/// Data-driven loss weights: cells larger than the median cell size count
/// as majority (0.7), smaller as minority (1.5), exactly median as neutral.
pub fn sample_weights(
    metas: &[SampleMeta],
    weight_majority: f64,
    weight_minority: f64,
) -> Vec<f64> {
    let mut sizes = [0usize; 4];
    for meta in metas {
        sizes[cell_index(meta.sex, meta.label)] += 1;
    }
    let mut sorted = sizes;
    sorted.sort_unstable();
    let median = (sorted[1] + sorted[2]) as f64 / 2.0;
    let weights: Vec<f64> = sizes
        .iter()
        .map(|&s| {
            if (s as f64) > median {
                weight_majority
            } else if (s as f64) < median {
                weight_minority
            } else {
                1.0
            }
        })
        .collect();
    metas
        .iter()
        .map(|m| weights[cell_index(m.sex, m.label)])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::Language;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn meta(id: usize, sex: Sex, label: Label) -> SampleMeta {
        SampleMeta {
            id: format!("s{id}"),
            speaker: format!("spk{id}"),
            label,
            language: Language::Fr,
            sex,
        }
    }

    fn four_cells(m_pd: usize, m_hc: usize, f_pd: usize, f_hc: usize) -> Vec<SampleMeta> {
        let mut out = Vec::new();
        let mut id = 0;
        for _ in 0..m_pd {
            out.push(meta(id, Sex::M, Label::Pd));
            id += 1;
        }
        for _ in 0..m_hc {
            out.push(meta(id, Sex::M, Label::Hc));
            id += 1;
        }
        for _ in 0..f_pd {
            out.push(meta(id, Sex::F, Label::Pd));
            id += 1;
        }
        for _ in 0..f_hc {
            out.push(meta(id, Sex::F, Label::Hc));
            id += 1;
        }
        out
    }

    #[test]
    fn cells_are_drawn_uniformly() {
        // Heavily imbalanced corpus; each cell must still get ~1/4 of draws.
        let metas = four_cells(100, 5, 3, 40);
        let sampler = BalancedSampler::new(&metas).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut counts = [0usize; 4];
        let draws = 10_000;
        for _ in 0..draws {
            let idx = sampler.draw(&mut rng);
            counts[cell_index(metas[idx].sex, metas[idx].label)] += 1;
        }
        for &c in &counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - 0.25).abs() < 0.02, "cell frequency {freq}");
        }
    }

    #[test]
    fn one_sample_per_cell_only_yields_those_ids() {
        let metas = four_cells(1, 1, 1, 1);
        let sampler = BalancedSampler::new(&metas).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert!(sampler.draw(&mut rng) < 4);
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let metas = four_cells(3, 2, 5, 1);
        let sampler = BalancedSampler::new(&metas).unwrap();
        let a: Vec<usize> = {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            (0..50).map(|_| sampler.draw(&mut rng)).collect()
        };
        let b: Vec<usize> = {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            (0..50).map(|_| sampler.draw(&mut rng)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn empty_cell_is_a_configuration_error() {
        let metas = four_cells(2, 2, 0, 2);
        let err = BalancedSampler::new(&metas).unwrap_err().to_string();
        assert!(err.contains("(F, PD)"), "{err}");
    }

    #[test]
    fn weights_follow_cell_sizes() {
        let metas = four_cells(10, 2, 3, 8);
        let w = sample_weights(&metas, 0.7, 1.5);
        // sizes: 10, 2, 3, 8; median = 5.5
        assert_eq!(w[0], 0.7); // (M, PD), majority
        assert_eq!(w[10], 1.5); // (M, HC), minority
        assert_eq!(w[12], 1.5); // (F, PD), minority
        assert_eq!(w[15], 0.7); // (F, HC), majority
    }
}
