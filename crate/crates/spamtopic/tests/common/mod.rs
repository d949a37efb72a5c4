#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub fn spamtopic(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spamtopic"))
        .current_dir(dir)
        .env_remove("SPAMTOPIC_OUT_DIR")
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn assert_ok(out: &Output) {
    assert!(out.status.success(), "exit {:?}: {}", out.status.code(), stderr(out));
}

const LEGIT_TOPICS: [&[&str]; 4] = [
    &[
        "football", "match", "goal", "team", "season", "coach", "league", "player", "score", "stadium",
    ],
    &[
        "recipe", "dinner", "bread", "garden", "tomato", "kitchen", "baking", "soup", "cheese", "market",
    ],
    &[
        "concert", "album", "guitar", "song", "band", "festival", "singer", "lyrics", "vinyl", "drummer",
    ],
    &[
        "python", "compiler", "database", "server", "deploy", "release", "bug", "kernel", "laptop", "network",
    ],
];

const SPAM_WORDS: [&str; 12] = [
    "free",
    "followers",
    "cheap",
    "deal",
    "click",
    "win",
    "prize",
    "discount",
    "offer",
    "money",
    "bonus",
    "viagra",
];

/// Deterministic mixing so the stand-in corpus needs no RNG dependency.
fn pick(seed: u64, n: usize) -> usize {
    let mut x = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x ^= x >> 31;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 29;
    (x % n as u64) as usize
}

/// A small English corpus in the Honeypot JSONL layout: legitimate users
/// chat about two hobbies, spammers repeat promotional words and links.
pub fn honeypot_like_jsonl(n_legit: usize, n_spam: usize) -> String {
    let mut out = String::new();
    for u in 0..n_legit + n_spam {
        let spam = u >= n_legit;
        let a = pick(u as u64, 4);
        let b = (a + 1 + pick(u as u64 + 1000, 3)) % 4;
        let mut posts = Vec::new();
        for p in 0..24 {
            let mut words = Vec::new();
            for w in 0..9 {
                let s = (u * 1000 + p * 10 + w) as u64;
                let word = if spam && pick(s, 10) < 7 {
                    SPAM_WORDS[pick(s + 7, SPAM_WORDS.len())]
                } else {
                    let topic = if pick(s + 3, 2) == 0 { a } else { b };
                    LEGIT_TOPICS[topic][pick(s + 5, 10)]
                };
                words.push(word.to_string());
            }
            if spam && p % 2 == 0 {
                words.push(format!("http://promo.example/{}", pick(u as u64 + p as u64, 50)));
            }
            if !spam && p % 5 == 0 {
                words.push(format!("@pal{}", pick(u as u64 * 7 + p as u64, 40)));
            }
            posts.push(words.join(" ") + "!");
        }
        let record = serde_json::json!({
            "user_id": format!("hp{u:04}"),
            "label": if spam { "spammer" } else { "legitimate" },
            "posts": posts,
        });
        out.push_str(&record.to_string());
        out.push('\n');
    }
    out
}
