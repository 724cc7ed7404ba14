//! The two worked dialogs used throughout the unit tests.

use crate::corpus::{Answer, DialogTurn, Instance};

pub const BENEFITS_RULE: &str = "## Sanctionable benefits\n\nThe following benefits can be reduced or stopped if you commit benefit fraud:\n\n* Carer\u{2019}s Allowance\n* Employment and Support Allowance\n* Housing Benefits\n* Incapacity Benefit";

pub const VAT_RULE: &str = "## Items that qualify for the zero rate\n\nYou may be able to apply zero VAT when you sell the following to an eligible charity:\n\n* equipment for making `talking\" books and newspapers\n* lifeboats and associated equipment, including fuel\n* medicine or ingredients for medicine\n* resuscitation training models";

pub fn benefits_instance() -> Instance {
    Instance {
        utterance_id: "benefits-1".into(),
        tree_id: "tree-benefits".into(),
        source_url: None,
        rule_text: BENEFITS_RULE.into(),
        question: "Can my benefit be reduced or stopped?".into(),
        scenario: "I am a 40 year old man working as an engineer.".into(),
        history: vec![DialogTurn::new("Do you get Carer's Allowance?", Answer::No)],
        evidence: vec![],
        gold_answer: "Do you get housing benefits?".into(),
    }
}

pub fn vat_instance() -> Instance {
    Instance {
        utterance_id: "vat-1".into(),
        tree_id: "tree-vat".into(),
        source_url: None,
        rule_text: VAT_RULE.into(),
        question: "Can I apply zero VAT to this item?".into(),
        scenario: String::new(),
        history: vec![
            DialogTurn::new(
                "Is it equipment for making \u{2018}talking\u{2019} books and newspapers?",
                Answer::No,
            ),
            DialogTurn::new("Are you selling medicine or ingredients for medicine?", Answer::Yes),
            DialogTurn::new(
                "Are you selling lifeboats and associated equipment, including fuel?",
                Answer::No,
            ),
        ],
        evidence: vec![],
        gold_answer: "Yes".into(),
    }
}
