import importlib
import inspect
import logging
import os.path
import pkgutil
import signal
import sys


def loadClassDictFromPkg(pkgName, pkgFile, baseClass, keyAttr):
    # Dynamically loads all classes in the specified package and returns
    # a dictionary keyed by the value of keyAttr on each class.
    #
    # Turtle protocols and adversary strategies are plugged in this way:
    # dropping a module into the package directory is enough to make its
    # classes available to scenario configs.
    #
    # Only subclasses of baseClass that define keyAttr are picked up.

    classes = {}
    for module in loadPkgModules(pkgName, pkgFile):
        classes.update(loadClassDict(loadModuleClasses(module), baseClass, keyAttr))
    return classes


def loadClassDict(classObjs, baseClass, keyAttr):
    # Builds a dictionary of classes keyed by their keyAttr value.
    #
    # Classes with keyAttr set to None are treated as abstract and skipped.

    classDict = {}
    for name, obj in classObjs:
        if issubclass(obj, baseClass) and getattr(obj, keyAttr, None) is not None:
            classDict[getattr(obj, keyAttr)] = obj
    return classDict


def loadPkgModules(pkgName, pkgFile):
    # Imports every module of a package given the package's __init__ path.
    #
    # Modules are imported in name order so the resulting dictionaries do
    # not depend on directory listing order.

    pkgpath = os.path.dirname(pkgFile)
    names = sorted(name for _, name, isPkg in pkgutil.iter_modules([pkgpath]) if not isPkg)
    return [importlib.import_module('{}.{}'.format(pkgName, name)) for name in names]


def loadModuleClasses(module):
    # Dynamically get all classes in a module.
    #
    # Classes imported into the module are ignored; only the ones defined
    # there are returned, as a list of (className, class) tuples.

    return inspect.getmembers(module, lambda o: inspect.isclass(o) and o.__module__ == module.__name__)


def signalHandler(signal, frame):
    # Callback to make sure long sweeps exit cleanly on Ctrl+C.
    #
    # Installed with signal.signal(signal.SIGINT, signalHandler).

    logging.info('Interrupted')
    sys.exit(130)


def installSignalHandler():
    signal.signal(signal.SIGINT, signalHandler)


class IdIncrement(object):
    # Generates auto incrementing ids: PREFIX1, PREFIX2, ...
    #
    # Two instances with the same parameters generate the same sequence,
    # which is what makes command ids reproducible across runs.

    def __init__(self, start=1, prefix='', increment=1):
        self.start = start
        self.prefix = prefix
        self.increment = increment

    def id(self):
        # Generates an id and then increments id.

        newId = ''.join([self.prefix, str(self.start)])
        self.start = self.start + self.increment
        return newId
