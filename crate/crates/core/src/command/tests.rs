use std::collections::BTreeMap;

use proptest::prelude::*;

use super::*;
use crate::chart::{AttributeKind, AttributeSchema};

fn vocab() -> Vocabulary {
    let schema = vec![
        AttributeSchema::new("country", AttributeKind::Categorical),
        AttributeSchema::new("continent", AttributeKind::Categorical),
        AttributeSchema::new("gdp", AttributeKind::Quantitative).with_unit("USD"),
        AttributeSchema::new("life_expectancy", AttributeKind::Quantitative),
        AttributeSchema::new("population", AttributeKind::Quantitative),
    ];
    let mut synonyms = BTreeMap::new();
    synonyms.insert(
        "gdp".to_string(),
        vec!["income".to_string(), "wealth".to_string()],
    );
    synonyms.insert(
        "population".to_string(),
        vec!["people".to_string(), "size".to_string()],
    );
    synonyms.insert(
        "life_expectancy".to_string(),
        vec!["lifespan".to_string(), "size".to_string()],
    );
    let mut categories = BTreeMap::new();
    categories.insert(
        "continent".to_string(),
        ["Asia", "Europe", "Africa", "North America"]
            .map(String::from)
            .to_vec(),
    );
    categories.insert(
        "country".to_string(),
        ["Japan", "Chad", "Norway", "Canada"]
            .map(String::from)
            .to_vec(),
    );
    Vocabulary {
        schema,
        synonyms,
        categories,
    }
}

fn cars_vocab() -> Vocabulary {
    let schema = vec![
        AttributeSchema::new("model", AttributeKind::Categorical),
        AttributeSchema::new("price", AttributeKind::Quantitative).with_unit("USD"),
        AttributeSchema::new("horsepower", AttributeKind::Quantitative),
    ];
    Vocabulary::new(schema, BTreeMap::new(), None)
}

#[test]
fn quantities() {
    assert_eq!(parse_quantity("$10,000").unwrap(), 10000.0);
    assert_eq!(parse_quantity("0").unwrap(), 0.0);
    // $1.5k: strip "$", suffix k multiplies 1.5 by 1000.
    assert_eq!(parse_quantity("$1.5k").unwrap(), 1500.0);
    assert_eq!(parse_quantity("2M").unwrap(), 2_000_000.0);
    assert_eq!(parse_quantity("€3,5").unwrap(), 35.0);
    assert_eq!(parse_quantity("-4.25").unwrap(), -4.25);
    for bad in ["", "$", "k", "ten", "1e5", "nan", "inf", "1.2.3", "--1"] {
        assert!(parse_quantity(bad).is_err(), "{bad:?} should not parse");
    }
}

#[test]
fn attribute_resolution() {
    let v = vocab();
    assert_eq!(
        resolve_attribute("GDP", &v.schema, &v.synonyms).unwrap(),
        "gdp"
    );
    assert_eq!(
        resolve_attribute("income", &v.schema, &v.synonyms).unwrap(),
        "gdp"
    );
    assert_eq!(
        resolve_attribute("Life Expectancy", &v.schema, &v.synonyms).unwrap(),
        "life_expectancy"
    );
    let err = resolve_attribute("size", &v.schema, &v.synonyms).unwrap_err();
    assert!(matches!(err, CommandError::AmbiguousAttribute { .. }));
    assert!(err.to_string().contains("ambiguous attribute"));
    assert!(matches!(
        resolve_attribute("altitude", &v.schema, &v.synonyms),
        Err(CommandError::UnknownAttribute(_))
    ));
}

#[test]
fn verbatim_utterances() {
    let v = vocab();
    assert_eq!(
        parse_command("Filter out countries with GDP larger than $10,000", &v).unwrap(),
        CommandAst::FilterOut {
            predicate: Predicate::compare("gdp", CompareOp::Gt, 10000.0)
        }
    );
    assert_eq!(
        parse_command("Filter out countries in Asia", &v).unwrap(),
        CommandAst::FilterOut {
            predicate: Predicate::category_is("continent", "Asia")
        }
    );
    assert_eq!(
        parse_command("Filter out cars above $40,000", &cars_vocab()).unwrap(),
        CommandAst::FilterOut {
            predicate: Predicate::compare("price", CompareOp::Gt, 40000.0)
        }
    );
}

#[test]
fn toggles_and_clears() {
    let v = vocab();
    let cases = [
        ("show details", CommandAst::DetailsOn),
        ("Hide Details", CommandAst::DetailsOff),
        ("clear filters", CommandAst::ClearFilters),
        ("CLEAR HIGHLIGHTS", CommandAst::ClearHighlights),
        ("reset.", CommandAst::Reset),
    ];
    for (text, ast) in cases {
        assert_eq!(parse_command(text, &v).unwrap(), ast, "{text}");
    }
}

#[test]
fn comparison_synonym_table_is_exhaustive() {
    let v = vocab();
    let expect = [
        ("larger than", CompareOp::Gt),
        ("greater than", CompareOp::Gt),
        ("above", CompareOp::Gt),
        ("over", CompareOp::Gt),
        ("smaller than", CompareOp::Lt),
        ("less than", CompareOp::Lt),
        ("below", CompareOp::Lt),
        ("under", CompareOp::Lt),
        ("equal to", CompareOp::Eq),
        ("at least", CompareOp::Ge),
        ("at most", CompareOp::Le),
    ];
    assert_eq!(expect.len(), COMPARISON_PHRASES.len());
    for (phrase, op) in expect {
        let text = format!("highlight countries where population {phrase} 5k");
        assert_eq!(
            parse_command(&text, &v).unwrap(),
            CommandAst::Highlight {
                predicate: Predicate::compare("population", op, 5000.0)
            },
            "{phrase}"
        );
    }
}

#[test]
fn show_only_and_highlight_forms() {
    let v = vocab();
    assert_eq!(
        parse_command("show only countries in north america", &v).unwrap(),
        CommandAst::ShowOnly {
            predicate: Predicate::category_is("continent", "North America")
        }
    );
    assert_eq!(
        parse_command("highlight lifespan at least 70", &v).unwrap(),
        CommandAst::Highlight {
            predicate: Predicate::compare("life_expectancy", CompareOp::Ge, 70.0)
        }
    );
    assert_eq!(
        parse_command("highlight where continent equal to europe", &v).unwrap(),
        CommandAst::Highlight {
            predicate: Predicate::category_is("continent", "Europe")
        }
    );
    assert_eq!(
        parse_command("Highlight in Japan", &v).unwrap(),
        CommandAst::Highlight {
            predicate: Predicate::category_is("country", "Japan")
        }
    );
}

#[test]
fn error_paths() {
    let v = vocab();
    let err = parse_command("Filter out nonsense", &v).unwrap_err();
    match &err {
        CommandError::Unrecognized { matched, rule, .. } => {
            assert_eq!(matched, "Filter out");
            assert_eq!(*rule, "pred");
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(err.to_string().contains("rule `pred`"));
    assert!(matches!(
        parse_command("dance", &v),
        Err(CommandError::Unrecognized {
            rule: "command",
            ..
        })
    ));
    assert!(matches!(
        parse_command("filter countries", &v),
        Err(CommandError::Unrecognized { rule: "filter", .. })
    ));
    assert!(matches!(
        parse_command("clear everything", &v),
        Err(CommandError::Unrecognized { rule: "clear", .. })
    ));
    assert!(matches!(
        parse_command("filter out countries in Atlantis", &v),
        Err(CommandError::UnknownCategory(_))
    ));
    assert!(matches!(
        parse_command("filter out countries with altitude above 5", &v),
        Err(CommandError::UnknownAttribute(a)) if a == "altitude"
    ));
    assert!(matches!(
        parse_command("filter out countries with gdp above lots", &v),
        Err(CommandError::NotANumber(_))
    ));
    assert!(matches!(
        parse_command("filter out countries where continent above 5", &v),
        Err(CommandError::KindMismatch { .. })
    ));
    assert!(matches!(
        parse_command("filter out countries above 5", &v),
        Err(CommandError::MissingAttribute(_))
    ));
    assert!(matches!(
        parse_command("", &v),
        Err(CommandError::Unrecognized { .. })
    ));
}

#[test]
fn implicit_monetary_attribute_needs_exactly_one_candidate() {
    let mut v = cars_vocab();
    v.schema
        .push(AttributeSchema::new("msrp", AttributeKind::Quantitative).with_unit("USD"));
    assert!(matches!(
        parse_command("filter out cars above $40,000", &v),
        Err(CommandError::AmbiguousImplicitAttribute { .. })
    ));
    let v = Vocabulary::new(
        vec![AttributeSchema::new("hp", AttributeKind::Quantitative)],
        BTreeMap::new(),
        None,
    );
    assert!(matches!(
        parse_command("filter out cars above $40,000", &v),
        Err(CommandError::AmbiguousImplicitAttribute { .. })
    ));
}

#[test]
fn in_value_ambiguity() {
    let mut v = vocab();
    v.categories
        .get_mut("country")
        .unwrap()
        .push("Asia".to_string());
    assert!(matches!(
        parse_command("filter out countries in asia", &v),
        Err(CommandError::AmbiguousCategory { .. })
    ));
}

fn arb_predicate() -> impl Strategy<Value = Predicate> {
    let ops = prop_oneof![
        Just(CompareOp::Gt),
        Just(CompareOp::Ge),
        Just(CompareOp::Lt),
        Just(CompareOp::Le),
        Just(CompareOp::Eq),
    ];
    let quant = prop_oneof![Just("gdp"), Just("life_expectancy"), Just("population")];
    let value = prop_oneof![
        (-1_000_000i64..1_000_000).prop_map(|v| v as f64),
        -1e9f64..1e9,
        (0u32..100).prop_map(|v| v as f64 / 8.0),
    ];
    let compare = (quant, ops, value).prop_map(|(a, op, v)| Predicate::compare(a, op, v));
    let category = prop_oneof![
        Just(Predicate::category_is("continent", "Asia")),
        Just(Predicate::category_is("continent", "North America")),
        Just(Predicate::category_is("country", "Chad")),
    ];
    prop_oneof![compare, category]
}

fn arb_command() -> impl Strategy<Value = CommandAst> {
    prop_oneof![
        arb_predicate().prop_map(|predicate| CommandAst::FilterOut { predicate }),
        arb_predicate().prop_map(|predicate| CommandAst::ShowOnly { predicate }),
        arb_predicate().prop_map(|predicate| CommandAst::Highlight { predicate }),
        Just(CommandAst::ClearFilters),
        Just(CommandAst::ClearHighlights),
        Just(CommandAst::Reset),
        Just(CommandAst::DetailsOn),
        Just(CommandAst::DetailsOff),
    ]
}

proptest! {
    #[test]
    fn canonical_text_round_trips(ast in arb_command()) {
        let text = ast.to_string();
        let parsed = parse_command(&text, &vocab());
        prop_assert_eq!(parsed, Ok(ast), "text was {:?}", text);
    }

    #[test]
    fn parser_is_total(text in "\\PC{0,60}") {
        let v = vocab();
        let a = parse_command(&text, &v);
        let b = parse_command(&text, &v);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn parser_is_total_on_grammar_words(words in proptest::collection::vec(prop_oneof![
        Just("filter"), Just("out"), Just("show"), Just("only"), Just("highlight"),
        Just("in"), Just("with"), Just("where"), Just("above"), Just("than"),
        Just("larger"), Just("at"), Just("least"), Just("gdp"), Just("$5"), Just("asia"),
        Just("countries"), Just("details"), Just("clear"), Just("reset"), Just("equal"), Just("to"),
    ], 0..8)) {
        let text = words.join(" ");
        let _ = parse_command(&text, &vocab());
    }
}
