//! Plain-text renderings for `--format table`.

use std::fmt::Write;

use qlens_core::views::{RecommendationPayload, ViewsPayload};
use qlens_service::IngestReport;

pub fn ingest(r: &IngestReport) -> String {
    let mut s = String::new();
    writeln!(s, "question        {}", r.question_id).unwrap();
    writeln!(s, "sessions added  {}", r.sessions_added).unwrap();
    writeln!(s, "overwritten     {}", r.overwritten.len()).unwrap();
    writeln!(s, "lines skipped   {}", r.lines_skipped).unwrap();
    writeln!(s, "drags dropped   {}", r.drags_dropped).unwrap();
    writeln!(s, "no-op drags     {}", r.noop_drags).unwrap();
    s
}

pub fn views(v: &ViewsPayload) -> String {
    let mut s = String::new();
    let o = &v.overview;
    writeln!(s, "{} ({})", v.title, v.question_id).unwrap();
    writeln!(s, "students {}  sessions {}", o.student_count, o.session_count).unwrap();
    writeln!(s, "\nscore  students").unwrap();
    for (score, n) in &o.score_histogram {
        writeln!(s, "{score:>5}  {n}").unwrap();
    }
    writeln!(s, "\nstage  hits  drop/stop  median dwell ms").unwrap();
    for st in &v.comparison.stages {
        let dwell = st.dwell.map_or("-".to_string(), |d| format!("{:.0}", d.median));
        writeln!(s, "{:>5}  {:>4}  {:>9}  {dwell}", st.stage, st.hit_times, st.drop_stop_count).unwrap();
    }
    writeln!(
        s,
        "\ntransition view: {} states, {} transitions (min count {})",
        v.transition.states.len(),
        v.transition.transitions.len(),
        v.transition.min_count
    )
    .unwrap();
    writeln!(s, "\nrank  answer  stage  fail enders  bypass").unwrap();
    for e in &v.errors {
        writeln!(s, "{:>4}  {}  {:>5}  {:>11}  {:>6}", e.rank, e.answer, e.stage, e.fail_enders, e.bypass_count).unwrap();
    }
    s
}

pub fn recommendation(r: &RecommendationPayload) -> String {
    let mut s = String::new();
    writeln!(s, "error {} (stage {})", r.error.answer, r.error.stage).unwrap();
    match &r.recommended {
        None => writeln!(s, "no full-mark session passes through this error").unwrap(),
        Some(p) => {
            writeln!(s, "from {} full-mark sessions:", p.qualifying_sessions).unwrap();
            for n in &p.nodes {
                match n.edge_probability {
                    Some(pr) => writeln!(s, "  -> {}  stage {}  p={pr:.2}", n.answer, n.stage).unwrap(),
                    None => writeln!(s, "     {}  stage {}", n.answer, n.stage).unwrap(),
                }
            }
            if p.ups_and_downs {
                writeln!(s, "path regresses {} time(s)", p.regressions).unwrap();
            }
        }
    }
    s
}
