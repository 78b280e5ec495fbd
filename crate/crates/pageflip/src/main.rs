fn main() {
    std::process::exit(pageflip::cli::dispatch(std::env::args_os()));
}
