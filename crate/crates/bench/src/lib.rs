//! Benchmark inputs shared by the criterion benches.

use varcore::{parse_rtw, Worksheet};

pub const TIME_INITIAL: &str = include_str!("../../../data/time/time_initial.rtw");
pub const TIME_FINAL: &str = include_str!("../../../data/time/time_final.rtw");

pub fn worksheet(text: &str) -> Worksheet {
    parse_rtw(text).expect("bundled worksheet parses")
}
