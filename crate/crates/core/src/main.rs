fn main() {
    let code = obsfem::cli::run(std::env::args_os());
    std::process::exit(code);
}
