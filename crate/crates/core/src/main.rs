fn main() {
    std::process::exit(codec_eval::cli::run(std::env::args_os()));
}
