from invoke.collection import Collection

from . import bundle, docs, test

ns = Collection()
ns.add_collection(test)
ns.add_collection(docs)
ns.add_collection(bundle)
