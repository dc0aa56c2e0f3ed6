fn main() {
    let args: Vec<String> = std::env::args().collect();
    let mut stdout = std::io::stdout().lock();
    std::process::exit(nonsig_cli::dispatch(&args, &mut stdout));
}
