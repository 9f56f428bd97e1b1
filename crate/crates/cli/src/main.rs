fn main() {
    std::process::exit(dabound::main_with(std::env::args_os()));
}
