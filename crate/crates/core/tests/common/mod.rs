//! A synthetic corpus with the shape of ShARC: bullet-list rules, simulated
//! users answering follow-ups in document order, one instance per decision
//! point, and a few off-topic questions with no context. Records with
//! identical content are dropped.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

use sharc_core::digest::content_hash;
use sharc_core::{Answer, DialogTurn, Instance};

const ITEMS: &[&str] = &[
    "Carer's Allowance",
    "Housing Benefit",
    "Child Benefit",
    "Pension Credit",
    "Income Support",
    "Jobseeker's Allowance",
    "Attendance Allowance",
    "Disability Living Allowance",
    "Working Tax Credit",
    "Universal Credit",
    "Council Tax Reduction",
    "Bereavement Support Payment",
    "Employment and Support Allowance",
    "Personal Independence Payment",
    "Incapacity Benefit",
    "Maternity Allowance",
];

const TOPICS: &[&str] = &[
    "a Winter Fuel Payment",
    "free school meals",
    "a Cold Weather Payment",
    "help with heating costs",
    "a Budgeting Loan",
    "free prescriptions",
    "a Sure Start Maternity Grant",
    "help with funeral costs",
    "a disabled parking badge",
    "free dental treatment",
    "a Warm Home Discount",
    "legal aid",
];

/// Scenarios that resolve no clause.
const FILLERS: &[&str] = &[
    "I am a {n} year old man working as an engineer.",
    "My wife and I live in Leeds with our {n} children.",
    "I retired {n} years ago after a career as a nurse.",
    "I moved here from Spain {n} years ago.",
];

const QUESTIONS: &[&str] = &[
    "Can I get {}?",
    "Am I eligible for {}?",
    "Do I qualify for {}?",
    "Could I claim {}?",
];

pub struct Tree {
    pub id: String,
    pub topic: &'static str,
    pub items: Vec<&'static str>,
    pub disjunctive: bool,
    pub rule: String,
}

fn make_tree(k: usize, rng: &mut ChaCha8Rng) -> Tree {
    let topic = TOPICS[k % TOPICS.len()];
    let n = rng.gen_range(3..=5);
    let items: Vec<&str> = ITEMS.choose_multiple(rng, n).copied().collect();
    let disjunctive = rng.gen_bool(0.6);
    let quantifier = if disjunctive { "any" } else { "all" };
    let mut rule = format!(
        "## Eligibility {k}\n\nYou can get {topic} if you get {quantifier} of the following:\n"
    );
    for item in &items {
        rule.push_str(&format!("\n* {item}"));
    }
    Tree {
        id: format!("tree-{k}"),
        topic,
        items,
        disjunctive,
        rule,
    }
}

fn instance(tree: &Tree, id: String, question: String, scenario: &str, history: &[DialogTurn], answer: String) -> Instance {
    Instance {
        utterance_id: id,
        tree_id: tree.id.clone(),
        source_url: None,
        rule_text: tree.rule.clone(),
        question,
        scenario: scenario.to_string(),
        history: history.to_vec(),
        evidence: history.to_vec(),
        gold_answer: answer,
    }
}

/// `users` simulated dialogs per tree, plus off-topic questions.
pub fn synthetic_sharc(trees: usize, users: usize, seed: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let forest: Vec<Tree> = (0..trees).map(|k| make_tree(k, &mut rng)).collect();
    let mut out = Vec::new();
    for tree in &forest {
        for u in 0..users {
            let question = QUESTIONS[rng.gen_range(0..QUESTIONS.len())].replace("{}", tree.topic);
            let truth: Vec<bool> = tree.items.iter().map(|_| rng.gen_bool(0.4)).collect();
            let mut known: Vec<Option<bool>> = vec![None; tree.items.len()];
            let mut scenario = String::new();
            if rng.gen_bool(0.6) {
                let j = rng.gen_range(0..tree.items.len());
                if truth[j] {
                    scenario = format!("I get {}.", tree.items[j]);
                    known[j] = Some(true);
                } else {
                    scenario = FILLERS[rng.gen_range(0..FILLERS.len())]
                        .replace("{n}", &rng.gen_range(2..90).to_string());
                }
            }
            let mut history = Vec::new();
            for step in 0.. {
                let decided = if tree.disjunctive {
                    if known.contains(&Some(true)) {
                        Some(true)
                    } else if known.iter().all(|k| *k == Some(false)) {
                        Some(false)
                    } else {
                        None
                    }
                } else if known.contains(&Some(false)) {
                    Some(false)
                } else if known.iter().all(|k| *k == Some(true)) {
                    Some(true)
                } else {
                    None
                };
                let id = format!("{}-u{u}-s{step}", tree.id);
                match decided {
                    Some(value) => {
                        let answer = if value { "Yes" } else { "No" };
                        out.push(instance(tree, id, question.clone(), &scenario, &history, answer.into()));
                        break;
                    }
                    None => {
                        let next = known.iter().position(Option::is_none).expect("undecided has unknowns");
                        let followup = format!("Do you get {}?", tree.items[next]);
                        // about 30% of the asking decision points are kept
                        if rng.gen_bool(0.3) {
                            out.push(instance(tree, id, question.clone(), &scenario, &history, followup.clone()));
                        }
                        known[next] = Some(truth[next]);
                        let answer = if truth[next] { Answer::Yes } else { Answer::No };
                        history.push(DialogTurn::new(followup, answer));
                    }
                }
            }
        }
    }
    let off_topic = out.len() / 16;
    for k in 0..off_topic {
        let tree = &forest[k % forest.len()];
        let other = &forest[(k * 7 + 3) % forest.len()];
        if other.topic == tree.topic {
            continue;
        }
        let question = format!("Am I entitled to {}?", other.topic);
        out.push(instance(tree, format!("{}-irr{k}", tree.id), question, "", &[], "Irrelevant".into()));
    }
    let mut seen = HashSet::new();
    out.retain(|i| seen.insert(content_hash(i)));
    out
}
