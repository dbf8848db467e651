fn main() {
    std::process::exit(rsjd::cli::run(std::env::args_os()));
}
