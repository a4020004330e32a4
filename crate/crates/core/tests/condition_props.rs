use proptest::prelude::*;
use qlens_core::conditions::{eval_all, ConditionArray};
use qlens_core::demo::{product_question, sorting_question};
use qlens_core::IntermediateAnswer;

fn digits(slots: usize, max: u32) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0..=max, slots)
}

proptest! {
    #[test]
    fn condition_array_text_roundtrip(len in 1usize..=32, raw in any::<u32>()) {
        let bits = if len == 32 { raw } else { raw & ((1u32 << len) - 1) };
        let text: String = (0..len).map(|i| if bits >> i & 1 == 1 { '1' } else { '0' }).collect();
        let parsed: ConditionArray = text.parse().unwrap();
        prop_assert_eq!(parsed.to_string(), text.clone());
        prop_assert_eq!(parsed.stage(), bits.count_ones() as usize);
        let json = serde_json::to_string(&parsed).unwrap();
        prop_assert_eq!(json, format!("\"{text}\""));
    }

    // Product question: one absolute condition per slot.
    #[test]
    fn product_stage_matches_slot_count(d in digits(6, 6)) {
        let m = product_question();
        let correct = [6, 3, 1, 5, 4, 2];
        let expected = d.iter().zip(correct).filter(|(a, b)| **a == *b).count();
        let (array, stage) = eval_all(&IntermediateAnswer::from_digits(&d), &m);
        prop_assert_eq!(stage, expected);
        prop_assert_eq!(array.stage(), expected);
        for (i, bit) in array.iter().enumerate() {
            prop_assert_eq!(bit, d[i] == correct[i]);
        }
    }

    // Sorting question: neighbours filled and strictly increasing in value.
    #[test]
    fn sorting_stage_matches_increasing_pairs(d in digits(5, 5)) {
        let m = sorting_question();
        let value = |e: u32| [0.0, 5.0, 350.0, 500.0, 1000.0, 2500.0][e as usize];
        let expected = d
            .windows(2)
            .filter(|w| w[0] != 0 && w[1] != 0 && value(w[0]) < value(w[1]))
            .count();
        let (_, stage) = eval_all(&IntermediateAnswer::from_digits(&d), &m);
        prop_assert_eq!(stage, expected);
    }
}
