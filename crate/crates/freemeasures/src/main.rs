fn main() {
    std::process::exit(freemeasures::run(std::env::args_os()));
}
