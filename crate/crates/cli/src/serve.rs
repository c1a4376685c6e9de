//! Line-oriented prediction server.
//!
//! Requests are JSON objects, one per line:
//! `{"context": "text", "strategy": "retrieval", "params": {"pen": 0.3}}`
//! — `strategy` and `params` are optional and default to the flags the
//! server was started with. Each request gets exactly one response line, in
//! request order: `{"prediction": [...], "score": ...}` on success, or an
//! `{"error": ..., "detail": ...}` object. Malformed lines never stop the
//! loop.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::Arc;

use serde::Deserialize;
use serde_json::json;

use emoji_combo_core::{
    greedy_topk, naive_top3, score_candidate, BowModel, CandidateDictionary, EmojiVocabulary,
    ProbabilityModel, Ranker, MAX_COMBINATION_LEN,
};

use crate::commands::StrategyArg;
use crate::config::{CliFailure, CliResult};

pub struct ServeState {
    pub model: BowModel,
    pub vocab: EmojiVocabulary,
    pub dict: CandidateDictionary,
    pub default_strategy: StrategyArg,
    pub default_thr: f64,
    pub default_pen: f64,
}

#[derive(Deserialize)]
struct Request {
    context: Option<String>,
    strategy: Option<String>,
    params: Option<Params>,
}

#[derive(Deserialize, Default)]
struct Params {
    thr: Option<f64>,
    pen: Option<f64>,
}

fn respond(state: &ServeState, ranker: &Ranker, line: &str) -> String {
    let request: Request = match serde_json::from_str(line) {
        Ok(r) => r,
        Err(e) => return json!({ "error": "parse", "detail": e.to_string() }).to_string(),
    };
    let Some(context) = request.context else {
        return json!({ "error": "invalid", "detail": "missing \"context\"" }).to_string();
    };
    let strategy = match request.strategy.as_deref() {
        None => state.default_strategy,
        Some("naive") => StrategyArg::Naive,
        Some("greedy") => StrategyArg::Greedy,
        Some("retrieval") => StrategyArg::Retrieval,
        Some(other) => {
            return json!({
                "error": "invalid",
                "detail": format!("unknown strategy {other:?}"),
            })
            .to_string();
        }
    };
    let params = request.params.unwrap_or_default();
    let p = state.model.predict(&context);
    let (combination, score) = match strategy {
        StrategyArg::Naive => match naive_top3(&p) {
            Ok(c) => {
                let s = score_candidate(&p, &c);
                (c, s)
            }
            Err(e) => {
                return json!({ "error": "invalid", "detail": e.to_string() }).to_string();
            }
        },
        StrategyArg::Greedy => {
            let thr = params.thr.unwrap_or(state.default_thr);
            if !(thr > 0.0 && thr <= 1.0) {
                return json!({
                    "error": "invalid",
                    "detail": format!("thr must be in (0, 1], got {thr}"),
                })
                .to_string();
            }
            let c = greedy_topk(&p, thr, MAX_COMBINATION_LEN);
            let s = score_candidate(&p, &c);
            (c, s)
        }
        StrategyArg::Retrieval => {
            let pen = params.pen.unwrap_or(state.default_pen);
            if !(pen.is_finite() && pen >= 0.0) {
                return json!({
                    "error": "invalid",
                    "detail": format!("pen must be >= 0, got {pen}"),
                })
                .to_string();
            }
            let ranked = ranker.predict(&p, pen);
            (ranked.combination, ranked.score)
        }
    };
    let rendered: Vec<&str> = combination
        .ids()
        .iter()
        .map(|&id| state.vocab.emoji(id).as_str())
        .collect();
    json!({ "prediction": rendered, "score": score }).to_string()
}

/// Serves requests from stdin to stdout until EOF.
pub fn run_stdio(state: ServeState) -> CliResult {
    let ranker = Ranker::new(&state.dict);
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for line in stdin.lock().lines() {
        let line = line.map_err(|e| CliFailure::data(format!("reading stdin: {e}")))?;
        let response = respond(&state, &ranker, &line);
        writeln!(out, "{response}").map_err(|e| CliFailure::data(format!("writing: {e}")))?;
        out.flush()
            .map_err(|e| CliFailure::data(format!("flushing: {e}")))?;
    }
    Ok(())
}

/// Serves the same line protocol over TCP, one thread per connection.
pub fn run_tcp(state: ServeState, port: u16) -> CliResult {
    let listener = TcpListener::bind(("127.0.0.1", port))
        .map_err(|e| CliFailure::data(format!("binding port {port}: {e}")))?;
    eprintln!("listening on 127.0.0.1:{port}");
    let state = Arc::new(state);
    for stream in listener.incoming() {
        let stream = stream.map_err(|e| CliFailure::data(format!("accepting: {e}")))?;
        let state = Arc::clone(&state);
        std::thread::spawn(move || {
            if let Err(e) = handle_connection(&state, stream) {
                eprintln!("connection error: {e}");
            }
        });
    }
    Ok(())
}

fn handle_connection(state: &ServeState, stream: TcpStream) -> std::io::Result<()> {
    let ranker = Ranker::new(&state.dict);
    let mut writer = stream.try_clone()?;
    let reader = BufReader::new(stream);
    for line in reader.lines() {
        let response = respond(state, &ranker, &line?);
        writeln!(writer, "{response}")?;
        writer.flush()?;
    }
    Ok(())
}
