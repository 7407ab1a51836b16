//! Reference backend for `dnsc rtcheck`: returns every frame unchanged.

fn main() {
    let stdin = std::io::stdin().lock();
    let stdout = std::io::stdout().lock();
    if let Err(e) = dnsc_core::rtcheck::serve_frames(stdin, stdout, |frame, _lookahead| frame.to_vec()) {
        eprintln!("passthrough: {e}");
        std::process::exit(1);
    }
}
