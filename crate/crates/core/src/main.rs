fn main() {
    std::process::exit(telco_placement::cli_io::cli_main(std::env::args_os()));
}
