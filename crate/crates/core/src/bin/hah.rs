use std::io::Write;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let mut out = Vec::new();
    let code = hah_core::cli::run(&args, &mut out);
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    let _ = lock.write_all(&out);
    let _ = lock.flush();
    std::process::exit(code);
}
