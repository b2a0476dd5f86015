fn main() {
    std::process::exit(textstyle::cli::run(std::env::args_os()));
}
