fn main() {
    std::process::exit(pulsed_dynamo::cli::run(std::env::args_os()));
}
