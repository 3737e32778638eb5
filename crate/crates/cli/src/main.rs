fn main() {
    std::process::exit(asyml1::run(std::env::args_os()));
}
