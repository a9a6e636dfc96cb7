fn main() {
    std::process::exit(rsma_jam::expcli::cli_main(std::env::args_os()));
}
