// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

use proptest::prelude::*;
use qrouter::photonics::{
    db_to_ratio, leak_ratio_per_pass, two_pass_crosstalk_ratio, worst_case_crosstalk_sum, MuxSpec,
};

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        ((a - b) / b).abs()
    }
}

/// Direct summation, written out channel by channel.
fn direct_sum(n: usize, adj: f64, nonadj: f64, x: f64, i: usize) -> f64 {
    let mut total = 0.0;
    for j in 1..=n {
        if j == i {
            continue;
        }
        let fc = if j + 1 == i || i + 1 == j { adj } else { nonadj };
        total += 10f64.powf((x + 2.0 * fc) / 10.0);
    }
    total
}

fn spec_strategy() -> impl Strategy<Value = MuxSpec> {
    (2usize..=64, 0.0f64..20.0, -60.0f64..-0.5, 0.0f64..30.0).prop_map(|(n, il, adj, gap)| {
        MuxSpec::new(n, il, adj, adj - gap).unwrap()
    })
}

#[test]
fn commercial_worst_case_matches_direct_sum() {
    let spec = MuxSpec::new(40, 5.0, -25.0, -30.0).unwrap();
    for i in 1..=40 {
        let a = worst_case_crosstalk_sum(&spec, 10.0, i).unwrap();
        assert!(rel(a.worst_case_sum, direct_sum(40, -25.0, -30.0, 10.0, i)) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn db_composition(a in -50.0f64..50.0, b in -50.0f64..50.0) {
        let lhs = db_to_ratio(a + b).value();
        let rhs = db_to_ratio(a).value() * db_to_ratio(b).value();
        prop_assert!(rel(lhs, rhs) < 1e-12);
    }

    #[test]
    fn leak_is_crosstalk_times_transmission(spec in spec_strategy(), offset in 1i64..40, neg in any::<bool>()) {
        let offset = if neg { -offset } else { offset };
        let leak = leak_ratio_per_pass(&spec, offset).unwrap().value();
        let fc = spec.crosstalk_db(offset).unwrap();
        let composed = db_to_ratio(spec.insertion_loss_db()).value() * 10f64.powf(fc / 10.0);
        prop_assert!(rel(leak, composed) < 1e-12);
        let two = two_pass_crosstalk_ratio(&spec, offset).unwrap();
        let squared = (leak / db_to_ratio(spec.insertion_loss_db()).value()).powi(2);
        prop_assert!(rel(two, squared) < 1e-12);
        prop_assert!(leak < db_to_ratio(spec.insertion_loss_db()).value());
    }

    #[test]
    fn ratios_are_probabilities(spec in spec_strategy(), offset in 1i64..40) {
        let t = db_to_ratio(spec.insertion_loss_db()).value();
        let l = leak_ratio_per_pass(&spec, offset).unwrap().value();
        prop_assert!((0.0..=1.0).contains(&t));
        prop_assert!((0.0..=1.0).contains(&l));
    }

    #[test]
    fn worst_case_matches_oracle(spec in spec_strategy(), x in 0.0f64..20.0, ch in 1usize..=64) {
        let i = (ch - 1) % spec.channel_count() + 1;
        let a = worst_case_crosstalk_sum(&spec, x, i).unwrap();
        let oracle = direct_sum(spec.channel_count(), spec.adjacent_crosstalk_db(), spec.nonadjacent_crosstalk_db(), x, i);
        prop_assert!(rel(a.worst_case_sum, oracle) < 1e-12);
        prop_assert!(a.contributions.iter().all(|t| t.ratio <= a.worst_case_sum));
    }

    #[test]
    fn worst_case_increases_with_x_and_fc(spec in spec_strategy(), x in 0.0f64..20.0, dx in 0.01f64..5.0, dfc in 0.01f64..0.4) {
        let i = spec.mid_band_channel();
        let base = worst_case_crosstalk_sum(&spec, x, i).unwrap().worst_case_sum;
        let more_x = worst_case_crosstalk_sum(&spec, x + dx, i).unwrap().worst_case_sum;
        prop_assert!(more_x > base);
        let adj = spec.adjacent_crosstalk_db();
        let louder = MuxSpec::new(spec.channel_count(), spec.insertion_loss_db(), (adj + dfc).min(-0.01), spec.nonadjacent_crosstalk_db()).unwrap();
        prop_assert!(worst_case_crosstalk_sum(&louder, x, i).unwrap().worst_case_sum > base);
        let non = spec.nonadjacent_crosstalk_db();
        let louder = MuxSpec::new(spec.channel_count(), spec.insertion_loss_db(), adj, (non + dfc).min(adj)).unwrap();
        if spec.channel_count() > 3 && non < adj {
            prop_assert!(worst_case_crosstalk_sum(&louder, x, i).unwrap().worst_case_sum > base);
        }
    }
}
