fn main() {
    std::process::exit(grushin_lab::cli::run(std::env::args_os()));
}
