use std::io;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let stdin = io::stdin();
    let mut io = recipeforge::cli::Io {
        stdin: &mut stdin.lock(),
        stdout: &mut io::stdout(),
        stderr: &mut io::stderr(),
    };
    std::process::exit(recipeforge::cli::run(std::env::args_os(), &mut io));
}
