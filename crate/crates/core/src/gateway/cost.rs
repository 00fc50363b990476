use super::ModelProfile;
use crate::money::Usd;

/// `input × input_rate / 1M + output × output_rate / 1M`, exact.
pub fn estimate_cost(profile: &ModelProfile, input_tokens: u64, output_tokens: u64) -> Usd {
    profile.input_cost_per_1m.scale(input_tokens, 1_000_000)
        + profile.output_cost_per_1m.scale(output_tokens, 1_000_000)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::ModelRegistry;
    use proptest::prelude::*;

    fn usd(s: &str) -> Usd {
        s.parse().unwrap()
    }

    #[test]
    fn table_prices() {
        let registry = ModelRegistry::seeded();
        let gpt4 = registry.lookup("gpt-4").unwrap();
        assert_eq!(estimate_cost(&gpt4, 1_000_000, 0), usd("30"));
        assert_eq!(estimate_cost(&gpt4, 1_000_000, 1_000_000), usd("90"));
        assert_eq!(estimate_cost(&gpt4, 0, 0), Usd::ZERO);
        // 13000 × 2.50/1M + 500 × 10/1M
        let gpt4o = registry.lookup("gpt-4o").unwrap();
        assert_eq!(estimate_cost(&gpt4o, 13_000, 500), usd("0.0375"));
    }

    proptest! {
        #[test]
        fn linear(a in 0u64..5_000_000, b in 0u64..5_000_000, c in 0u64..5_000_000, d in 0u64..5_000_000, idx in 0usize..8) {
            let registry = ModelRegistry::seeded();
            let profile = registry.list()[idx].clone();
            prop_assert_eq!(
                estimate_cost(&profile, a + b, c + d),
                estimate_cost(&profile, a, c) + estimate_cost(&profile, b, d)
            );
        }
    }
}
