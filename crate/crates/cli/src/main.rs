fn main() {
    std::process::exit(vlnplan_cli::run(std::env::args_os()));
}
