from lrle.cli import main

main()
