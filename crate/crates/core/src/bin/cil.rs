use std::io::Write;

fn main() {
    match conformal_ifs::cli::run_args(std::env::args_os()) {
        Ok((out, status)) => {
            let _ = std::io::stdout().write_all(out.as_bytes());
            std::process::exit(status.exit_code());
        }
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    }
}
