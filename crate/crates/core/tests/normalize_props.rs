use proptest::prelude::*;
use tajfar_core::normalize::{join_affixes, normalize_text, NormalizeConfig, ZwnjMode};
use tajfar_core::script::{self, Script, ZWNJ};

const POOL: &[&str] = &[
    "ک", "ت", "ا", "ب", "ه", "ی", "و", "ع", "آ", "ي", "ك", "\u{064E}", "\u{0651}", "۱", "،", "؟", "ها", "را", "می",
    "а", "б", "ӯ", "ӣ", "Ҷ", "ҳ", "ъ", "\u{0301}", "у\u{0306}", "-", "—", "!", "7", "x", "Z", "é", "中", " ", "  ", "\t",
    "\n", "\u{200C}", "\u{200D}", "\u{FEFF}", "\u{00A0}",
];

fn messy() -> impl Strategy<Value = String> {
    prop_oneof![
        proptest::collection::vec(proptest::sample::select(POOL.to_vec()), 0..24).prop_map(|v| v.concat()),
        any::<String>(),
    ]
}

fn script() -> impl Strategy<Value = Script> {
    prop_oneof![Just(Script::PersoArabic), Just(Script::TajikCyrillic)]
}

fn config() -> impl Strategy<Value = NormalizeConfig> {
    (any::<bool>(), any::<bool>(), any::<bool>(), 0..3u8).prop_map(|(d, p, h, z)| {
        let zwnj_mode = [ZwnjMode::Keep, ZwnjMode::Remove, ZwnjMode::SpaceReplace][z as usize];
        NormalizeConfig {
            strip_diacritics: d,
            strip_digits_punct: p,
            strip_tajik_hyphen: h,
            join_affixes: zwnj_mode == ZwnjMode::Keep,
            zwnj_mode,
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn idempotent(text in messy(), script in script(), cfg in config()) {
        let once = normalize_text(&text, script, &cfg);
        prop_assert_eq!(normalize_text(&once, script, &cfg), once.clone());
    }

    #[test]
    fn default_output_is_inventory_letters(text in messy(), script in script()) {
        let out = normalize_text(&text, script, &NormalizeConfig::default());
        prop_assert!(!out.starts_with(' ') && !out.ends_with(' ') && !out.contains("  "));
        prop_assert!(!out.starts_with(ZWNJ) && !out.ends_with(ZWNJ));
        for c in out.chars() {
            let ok = c == ' ' || (c == ZWNJ && script == Script::PersoArabic) || script::is_inventory_char(c, script).is_some();
            prop_assert!(ok, "unexpected {:?} in {:?}", c, out);
        }
        prop_assert!(script::segment(&out.replace(' ', ""), script).is_ok());
    }

    #[test]
    fn letters_survive(text in messy(), script in script()) {
        // every inventory letter of the (composed) input is still there, in order
        let cfg = NormalizeConfig { strip_diacritics: false, ..NormalizeConfig::default() };
        let out = normalize_text(&text, script, &cfg);
        let keep = |s: &str| -> String {
            use unicode_normalization::UnicodeNormalization;
            let kept: String = s.nfc().filter(|&c| c != ZWNJ && script::is_inventory_char(c, script).is_some()).collect();
            kept.nfc().collect()
        };
        prop_assert_eq!(keep(&text), keep(&out));
    }

    #[test]
    fn joining_is_idempotent(words in proptest::collection::vec(proptest::sample::select(vec!["می", "کتاب", "ها", "را", "و", "خانه", "است", "های", "نمی"]), 0..8)) {
        let text = words.join(" ");
        let once = join_affixes(&text);
        prop_assert_eq!(join_affixes(&once), once.clone());
        prop_assert_eq!(once.replace(ZWNJ, " "), text);
    }
}

#[test]
fn affix_rows_in_three_spellings() {
    let keep = NormalizeConfig::default();
    let remove = NormalizeConfig {
        join_affixes: false,
        zwnj_mode: ZwnjMode::Remove,
        ..NormalizeConfig::default()
    };
    let space = NormalizeConfig {
        join_affixes: false,
        zwnj_mode: ZwnjMode::SpaceReplace,
        ..NormalizeConfig::default()
    };
    let rows = [
        ("موضوع را", "موضوع\u{200C}را", "موضوعرا"),
        ("خانه ها", "خانه\u{200C}ها", "خانهها"),
        ("می خواهم", "می\u{200C}خواهم", "میخواهم"),
        ("کتاب فروش", "کتاب\u{200C}فروش", "کتابفروش"),
    ];
    for (spaced, joined, glued) in rows {
        let fa = |s: &str, c: &NormalizeConfig| normalize_text(s, Script::PersoArabic, c);
        assert_eq!(fa(spaced, &keep), joined);
        assert_eq!(fa(joined, &keep), joined);
        assert_eq!(fa(joined, &remove), glued);
        assert_eq!(fa(joined, &space), spaced);
    }
}
