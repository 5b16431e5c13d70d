fn main() {
    std::process::exit(askloop_service::cli::main_with(std::env::args_os()));
}
