from ctmc.bounds.cli import main

raise SystemExit(main())
