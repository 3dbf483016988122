fn main() {
    std::process::exit(centalign_cli::app::run(std::env::args_os()));
}
