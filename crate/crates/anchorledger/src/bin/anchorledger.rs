use std::process::ExitCode;

fn main() -> ExitCode {
    // Die quietly on closed pipes like other line-oriented tools.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    ExitCode::from(anchorledger::cli::run() as u8)
}
