use proptest::prelude::*;
use sacreddetect_core::judge::{parse_verdict, parse_verdict_with, Verdict};
use sacreddetect_core::Label;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn total_over_arbitrary_bytes(bytes in prop::collection::vec(any::<u8>(), 0..400), strict in any::<bool>()) {
        let raw = String::from_utf8_lossy(&bytes);
        let v = parse_verdict_with("s", "m", &raw, strict);
        prop_assert_eq!(&v.raw_text, &*raw);
        prop_assert_eq!(v.clone(), parse_verdict_with("s", "m", &raw, strict));
        if v.label.is_valid() {
            prop_assert!(v.certainty.is_some_and(|c| c <= 100));
            prop_assert!(v.argumentation.is_some());
        }
    }

    #[test]
    fn total_over_json_like_noise(raw in r#"[{}"\\:,a-zA-Z0-9% ]{0,120}"#) {
        let v = parse_verdict("s", "m", &raw);
        prop_assert_eq!(v.label.is_valid(), v.certainty.is_some());
    }

    #[test]
    fn round_trip(yes in any::<bool>(), certainty in 0u8..=100, arg in any::<String>(), prefix in "[a-z .:]{0,20}") {
        let v = Verdict {
            sentence_id: "s".into(),
            model_id: "m".into(),
            label: if yes { Label::Yes } else { Label::No },
            certainty: Some(certainty),
            argumentation: Some(arg),
            raw_text: String::new(),
        };
        let schema = v.to_schema_string().unwrap();
        let again = parse_verdict("s", "m", &format!("{prefix}{schema}"));
        prop_assert_eq!(Verdict { raw_text: String::new(), ..again }, v);
    }
}

/// Hand-parsed responses in the shapes models actually return.
#[test]
fn fixture_set() {
    let cases: &[(&str, Label, Option<u8>)] = &[
        (r#"{"Religious": "Yes", "Certainty": "95%", "Argumentation": "Refers to prayer."}"#, Label::Yes, Some(95)),
        ("```json\n{\"Religious\": \"No\", \"Certainty\": \"80%\", \"Argumentation\": \"Descriptive.\"}\n```", Label::No, Some(80)),
        (r#"Sure, here you go: {"religious":"no","certainty":"85%","argumentation":"descriptive"}"#, Label::No, Some(85)),
        (r#"{"RELIGIOUS": " yes ", "CERTAINTY": 70, "ARGUMENTATION": "x"}"#, Label::Yes, Some(70)),
        (r#"{"Religious": "Yes" or "No", "Certainty": "90%", "Argumentation": "x"}"#, Label::Malformed, None),
        (r#"{"Religious": "Yes", "Certainty": "90%", "Argumentation": "cut off"#, Label::Malformed, None),
        (r#"{'Religious': 'Yes', 'Certainty': '90%', 'Argumentation': 'x'}"#, Label::Malformed, None),
        ("", Label::Malformed, None),
    ];
    for (raw, label, certainty) in cases {
        let v = parse_verdict("s", "m", raw);
        assert_eq!((v.label, v.certainty), (*label, *certainty), "{raw}");
    }
}
