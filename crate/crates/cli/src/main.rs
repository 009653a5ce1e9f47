fn main() {
    std::process::exit(sgb_cli::parse_and_dispatch(std::env::args()));
}
