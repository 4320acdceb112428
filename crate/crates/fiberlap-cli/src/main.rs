fn main() {
    std::process::exit(fiberlap_cli::main_entry(std::env::args_os()));
}
