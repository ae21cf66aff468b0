use std::io::{self, BufReader};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let stdin = io::stdin();
    let mut input = BufReader::new(stdin.lock());
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut err = io::stderr();
    let code = oc_catalog::cli::run(std::env::args_os(), &|k| std::env::var(k).ok(), &mut input, &mut out, &mut err);
    std::process::exit(code);
}
