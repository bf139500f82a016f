fn main() {
    std::process::exit(qsvt_vlasov::cli::run(std::env::args_os()));
}
