fn main() {
    std::process::exit(violin_amt::cli::run(std::env::args_os()));
}
