use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Cohen's kappa between two raters' labels for the same items.
///
/// Returns exactly 1.0 whenever the raters agree on every item, including
/// the degenerate case where both used a single label throughout.
pub fn cohen_kappa<T: Ord>(a: &[T], b: &[T]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Argument(format!(
            "rater label lists differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::Argument("kappa needs at least one rated item".into()));
    }
    let n = a.len() as f64;
    let mut marg_a: BTreeMap<&T, usize> = BTreeMap::new();
    let mut marg_b: BTreeMap<&T, usize> = BTreeMap::new();
    let mut agree = 0usize;
    for (x, y) in a.iter().zip(b) {
        *marg_a.entry(x).or_default() += 1;
        *marg_b.entry(y).or_default() += 1;
        if x == y {
            agree += 1;
        }
    }
    if agree == a.len() {
        return Ok(1.0);
    }
    let observed = agree as f64 / n;
    let chance: f64 = marg_a
        .iter()
        .map(|(label, &ca)| {
            let cb = marg_b.get(label).copied().unwrap_or(0);
            (ca as f64 / n) * (cb as f64 / n)
        })
        .sum();
    kappa_from_agreement(observed, chance)
}

/// (p_o - p_e) / (1 - p_e) with the p_e = 1 limit handled.
pub fn kappa_from_agreement(observed: f64, chance: f64) -> Result<f64> {
    if chance >= 1.0 {
        if observed >= 1.0 {
            return Ok(1.0);
        }
        return Err(Error::DegenerateMarginals { observed });
    }
    Ok((observed - chance) / (1.0 - chance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Leaf;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_lists() {
        let a = [Leaf::Effective, Leaf::Irrelevant, Leaf::Ineffective];
        assert_eq!(cohen_kappa(&a, &a).unwrap(), 1.0);
        let single = [Leaf::Effective; 5];
        assert_eq!(cohen_kappa(&single, &single).unwrap(), 1.0);
    }

    #[test]
    fn hand_computed_agreement() {
        // p_o = 0.8, p_e = 0.6*0.7 + 0.4*0.3 = 0.54
        let k = kappa_from_agreement(0.8, 0.54).unwrap();
        assert!((k - 0.26 / 0.46).abs() < 1e-12);
        assert!((k - 0.5652).abs() < 1e-4);

        // A: 6 x / 4 y, B: 7 x / 3 y, 9 agreements -> p_o = 0.9, p_e = 0.54
        let a = ["x", "x", "x", "x", "x", "x", "y", "y", "y", "y"];
        let b = ["x", "x", "x", "x", "x", "x", "x", "y", "y", "y"];
        let k = cohen_kappa(&a, &b).unwrap();
        assert!((k - 0.36 / 0.46).abs() < 1e-12);
    }

    #[test]
    fn symmetric() {
        let a = ["x", "y", "z", "x", "x", "z"];
        let b = ["x", "z", "z", "y", "x", "x"];
        assert_eq!(cohen_kappa(&a, &b).unwrap(), cohen_kappa(&b, &a).unwrap());
    }

    #[test]
    fn errors() {
        assert!(matches!(
            cohen_kappa(&["x"], &["x", "y"]),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            cohen_kappa::<&str>(&[], &[]),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            kappa_from_agreement(0.5, 1.0),
            Err(Error::DegenerateMarginals { .. })
        ));
    }

    #[test]
    fn coin_rater_is_near_zero() {
        let mut total = 0.0;
        let seeds = 200;
        for seed in 0..seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a: Vec<bool> = (0..200).map(|_| rng.gen_bool(0.3)).collect();
            let b: Vec<bool> = (0..200).map(|_| rng.gen_bool(0.5)).collect();
            total += cohen_kappa(&a, &b).unwrap();
        }
        let mean = total / seeds as f64;
        assert!(mean.abs() < 0.01, "mean kappa {mean}");
    }
}
