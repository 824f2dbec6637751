fn main() {
    std::process::exit(lqmargin::cli::run(std::env::args_os()));
}
